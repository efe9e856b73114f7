"""Closed-form counting bounds and thresholds, evaluated exactly.

Every comparison here is done on integers or ``Fraction``s; nothing goes
through a floating-point logarithm.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb, factorial, gcd

from .poly import factorize, superfactorial, vandermonde

DECIMAL_DIGITS = 50


@dataclass(frozen=True)
class BoundReport:
    formula: str
    params: tuple[tuple[str, int], ...]
    value: Fraction | int | bool
    decimal: str = ""

    def lines(self) -> list[str]:
        out = [f"formula={self.formula}"]
        out += [f"{k}={v}" for k, v in self.params]
        out.append(f"value={self.value}")
        if self.decimal:
            out.append(f"decimal={self.decimal}")
        return out


def to_decimal(x: Fraction, digits: int = DECIMAL_DIGITS) -> str:
    with localcontext() as ctx:
        ctx.prec = digits + 5
        v = Decimal(x.numerator) / Decimal(x.denominator)
        return format(v, f".{digits}g")


def totient(n: int) -> int:
    out = n
    for p, _ in factorize(n):
        out = out // p * (p - 1)
    return out


def units_mod(q: int) -> list[int]:
    return [t for t in range(1, q) if gcd(t, q) == 1] if q > 1 else []


@lru_cache(maxsize=256)
def vandermonde_sum(d: int, k: int) -> int:
    """Sum of ``vandermonde(S)`` over all ``(d+1)``-subsets ``S`` of ``1..k``."""
    if d == 1:
        return comb(k + 1, 3)
    if k <= d:
        return 0
    # grow k by one: new subsets are those containing k
    prev = vandermonde_sum(d, k - 1)
    add = 0
    for rest in combinations(range(1, k), d):
        v = vandermonde(rest)
        for x in rest:
            v *= k - x
        add += v
    return prev + add


def mainbound_exact(d: int, k: int) -> Fraction:
    """``4^{d+1}/(d+2) * sum_S vandermonde(S) / prod_{n<=d} n!`` over ``S`` in ``1..k``."""
    if d < 0 or k < d + 1:
        raise ValueError("need k >= d + 1 >= 1")
    return Fraction(4 ** (d + 1) * vandermonde_sum(d, k), (d + 2) * superfactorial(d))


def c_constant(d: int) -> Fraction:
    if d < 1:
        raise ValueError("d must be at least 1")
    return Fraction(4 ** (d + 1), factorial(d + 2) * superfactorial(d))


def _threshold_exponent(d: int) -> int:
    return (d + 1) * (d + 2) // 2 + 2


def main2_threshold(d: int, q: int) -> bool:
    """``2^phi(q) >= q^((d+1)(d+2)/2 + 2) * c_d``, compared exactly."""
    if q < 2:
        raise ValueError("q must be at least 2")
    return 2 ** totient(q) >= q ** _threshold_exponent(d) * c_constant(d)


def minimal_q(d: int, q_max: int = 1 << 20) -> int:
    for q in range(2, q_max + 1):
        if main2_threshold(d, q):
            return q
    raise ValueError(f"no q <= {q_max} satisfies the threshold for d={d}")


def counting_certificate(d: int, q: int, pattern_count: int) -> bool:
    """``q * phi(q) * pattern_count < 2^phi(q)``: some twist survives every pattern."""
    if pattern_count < 0:
        raise ValueError("pattern_count must be non-negative")
    phi = totient(q)
    return q * phi * pattern_count < 2**phi


def double_factorial_odd(r: int) -> int:
    out = 1
    for i in range(1, 2 * r, 2):
        out *= i
    return out


def back1_lower_bound(m: int, r: int) -> Fraction:
    if m < 1 or r < 1:
        raise ValueError("m and r must be positive")
    return Fraction(2 * m**r, double_factorial_odd(r))


def shelah_vertex_bound(m: int, d: int) -> int:
    if m < d + 1:
        raise ValueError("need m >= d + 1")
    return 2 * sum(comb(m - 1, i) for i in range(d + 1))


@lru_cache(maxsize=None)
def bernoulli(n: int) -> Fraction:
    """Bernoulli number with ``B_1 = -1/2``."""
    B = [Fraction(1)]
    for m in range(1, n + 1):
        B.append(-sum(comb(m + 1, j) * B[j] for j in range(m)) / (m + 1))
    return B[n]


def zeta_even_over_pi(s: int) -> Fraction:
    """``zeta(s) / pi^s`` for even ``s >= 2``; a rational number."""
    if s < 2 or s % 2:
        raise ValueError("s must be an even integer >= 2")
    return (-1) ** (s // 2 + 1) * bernoulli(s) * 2 ** (s - 1) / factorial(s)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def chowla_closed_form(d: int) -> tuple[Fraction, str]:
    """Displayed value for the ``(d+2)``-point correlation, defined when ``d+2`` is a power of two.

    ``2^{d+3} (-1)^{(d+2)/2} zeta(d+2) / (pi^{d+2} (1 - 2^{-d-2}) prod_i C(d+1, i))``.
    See :func:`chowla_correlation` for the value the model actually has.
    """
    s = d + 2
    if d < 0 or not _is_power_of_two(s) or s < 2:
        raise ValueError(f"d+2 = {s} is not a power of two")
    prod = 1
    for i in range(s):
        prod *= comb(s - 1, i)
    v = Fraction(2 ** (d + 3) * (-1) ** (s // 2)) * zeta_even_over_pi(s)
    v /= (1 - Fraction(1, 2**s)) * prod
    return v, to_decimal(v)


def chowla_correlation(d: int) -> tuple[Fraction, str]:
    """Exact ``E prod_{t=1}^{d+2} F(T^t x)`` on the degree-``d`` torus model.

    The values ``y_t = f(t)`` for ``t <= d+1`` are independent and uniform
    mod 2, and ``y_{d+2} = sum_t c_t y_t`` with ``c_t = (-1)^{d+1-t} C(d+1, t-1)``.
    Expanding the square wave ``(-1)^floor(y)`` in its Fourier series (odd
    frequencies only, coefficient ``2 / (i pi m)``) leaves a single sum over
    odd ``m``, nonzero exactly when every ``c_t`` is odd.
    """
    s = d + 2
    if d < 0 or not _is_power_of_two(s) or s < 2:
        raise ValueError(f"d+2 = {s} is not a power of two")
    cs = [(-1) ** (s - 1 - t) * comb(s - 1, t - 1) for t in range(1, s)]
    prod = 1
    for c in cs:
        prod *= c
    # sum over odd m != 0 of ghat(m) prod_t ghat(-m c_t),  ghat(m) = 2 / (i pi m)
    # = 2^s / (i^s (-1)^{s-1} pi^s m^s prod c) summed: 2 (1 - 2^-s) zeta(s)
    i_pow = (-1) ** (s // 2)  # i^s for even s
    v = Fraction(2**s * 2, i_pow * (-1) ** (s - 1) * prod)
    v *= (1 - Fraction(1, 2**s)) * zeta_even_over_pi(s)
    return v, to_decimal(v)


__all__ = [
    "BoundReport",
    "back1_lower_bound",
    "bernoulli",
    "c_constant",
    "chowla_closed_form",
    "chowla_correlation",
    "counting_certificate",
    "double_factorial_odd",
    "main2_threshold",
    "mainbound_exact",
    "minimal_q",
    "shelah_vertex_bound",
    "totient",
    "units_mod",
    "vandermonde_sum",
    "zeta_even_over_pi",
]
