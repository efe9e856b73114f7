"""Exact polynomial arithmetic, binomial coordinates, and multiplicative functions.

Polynomials of degree at most ``d`` are stored as ``d + 1`` exact rationals.
The binomial basis ``C(x, j)`` is the coordinate system for the torus
``R^{d+1} / H`` where ``H`` is the lattice of even-integer-valued
polynomials: in these coordinates ``H = 2 Z^{d+1}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Iterable, Mapping, Sequence

Rational = Fraction | int


def _as_fraction(x: Rational) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


class DegreeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class RationalPoly:
    """Polynomial ``sum coeffs[j] * x**j`` with a fixed degree bound."""

    coeffs: tuple[Fraction, ...]

    def __init__(self, coeffs: Iterable[Rational]):
        cs = tuple(_as_fraction(c) for c in coeffs)
        if not cs:
            raise ValueError("a polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", cs)

    @classmethod
    def zero(cls, d: int) -> "RationalPoly":
        return cls([0] * (d + 1))

    @property
    def d(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, n: Rational) -> Fraction:
        return evaluate(self, n)

    def _check(self, other: "RationalPoly") -> None:
        if other.d != self.d:
            raise DegreeMismatch(f"degree bounds differ: {self.d} vs {other.d}")

    def __add__(self, other: "RationalPoly") -> "RationalPoly":
        self._check(other)
        return RationalPoly(a + b for a, b in zip(self.coeffs, other.coeffs))

    def __sub__(self, other: "RationalPoly") -> "RationalPoly":
        self._check(other)
        return RationalPoly(a - b for a, b in zip(self.coeffs, other.coeffs))

    def __neg__(self) -> "RationalPoly":
        return RationalPoly(-a for a in self.coeffs)

    def scale(self, c: Rational) -> "RationalPoly":
        c = _as_fraction(c)
        return RationalPoly(c * a for a in self.coeffs)

    def __repr__(self) -> str:
        return f"RationalPoly({[str(c) for c in self.coeffs]})"


@dataclass(frozen=True)
class BinomialCoords:
    """Coefficients ``u`` with ``f(x) = sum u[j] * C(x, j)``."""

    u: tuple[Fraction, ...]

    def __init__(self, u: Iterable[Rational]):
        us = tuple(_as_fraction(c) for c in u)
        if not us:
            raise ValueError("need at least one coordinate")
        object.__setattr__(self, "u", us)

    @property
    def d(self) -> int:
        return len(self.u) - 1

    def reduced(self) -> "BinomialCoords":
        """Representative with every coordinate in ``[0, 2)``."""
        return BinomialCoords(c % 2 for c in self.u)


def evaluate(f: RationalPoly, n: Rational) -> Fraction:
    x = _as_fraction(n)
    acc = Fraction(0)
    for c in reversed(f.coeffs):
        acc = acc * x + c
    return acc


def interpolate(points: Sequence[tuple[int, Rational]], d: int) -> RationalPoly:
    """Unique polynomial of degree ``<= d`` through ``d + 1`` points (Lagrange)."""
    if len(points) != d + 1:
        raise ValueError(f"need exactly {d + 1} points, got {len(points)}")
    xs = [int(x) for x, _ in points]
    if len(set(xs)) != len(xs):
        raise ValueError("interpolation abscissae must be distinct")
    out = [Fraction(0)] * (d + 1)
    for i, (xi, yi) in enumerate(points):
        yi = _as_fraction(yi)
        if yi == 0:
            continue
        # numerator prod_{j != i} (x - x_j), built in the power basis
        num = [Fraction(1)]
        denom = 1
        for j, xj in enumerate(xs):
            if j == i:
                continue
            num = [Fraction(0)] + num
            for t in range(len(num) - 1):
                num[t] -= xj * num[t + 1]
            denom *= xi - xj
        scale = yi / denom
        for t, c in enumerate(num):
            out[t] += scale * c
    return RationalPoly(out)


@lru_cache(maxsize=None)
def _binomial_power_coeffs(j: int) -> tuple[Fraction, ...]:
    """Power-basis coefficients of ``C(x, j) = x (x-1) ... (x-j+1) / j!``."""
    num = [Fraction(1)]
    for t in range(j):
        num = [Fraction(0)] + num
        for s in range(len(num) - 1):
            num[s] -= t * num[s + 1]
    jf = factorial(j)
    return tuple(c / jf for c in num)


def to_binomial(f: RationalPoly) -> BinomialCoords:
    # u_j is the j-th forward difference of f at 0
    vals = [evaluate(f, n) for n in range(f.d + 1)]
    u = []
    for _ in range(f.d + 1):
        u.append(vals[0])
        vals = [b - a for a, b in zip(vals, vals[1:])]
    return BinomialCoords(u)


def from_binomial(u: BinomialCoords | Sequence[Rational]) -> RationalPoly:
    if not isinstance(u, BinomialCoords):
        u = BinomialCoords(u)
    out = [Fraction(0)] * (u.d + 1)
    for j, uj in enumerate(u.u):
        if uj == 0:
            continue
        for t, c in enumerate(_binomial_power_coeffs(j)):
            out[t] += uj * c
    return RationalPoly(out)


def binomial_eval(u: BinomialCoords, n: int) -> Fraction:
    return sum((c * comb_signed(n, j) for j, c in enumerate(u.u)), Fraction(0))


def comb_signed(n: int, j: int) -> int:
    """``C(n, j)`` as a polynomial in ``n``; valid for negative ``n`` too."""
    if j < 0:
        return 0
    if n >= 0:
        return comb(n, j)
    # C(-m, j) = (-1)^j C(m + j - 1, j)
    return (-1) ** j * comb(-n + j - 1, j)


def composition_matrix(a: int, d: int, shift: int = 0) -> tuple[tuple[int, ...], ...]:
    """Integer matrix sending binomial coordinates of ``f`` to those of ``f(a*x + shift)``.

    Column ``j`` holds the binomial coordinates of ``C(a*x + shift, j)``,
    found by evaluating at ``0..d`` and taking forward differences.
    """
    if a < 1:
        raise ValueError("scale factor must be a positive integer")
    cols = []
    for j in range(d + 1):
        vals = [comb_signed(a * x + shift, j) for x in range(d + 1)]
        col = []
        for _ in range(d + 1):
            col.append(vals[0])
            vals = [b - c for c, b in zip(vals, vals[1:])]
        cols.append(col)
    rows = tuple(tuple(cols[j][i] for j in range(d + 1)) for i in range(d + 1))
    for row in rows:
        for e in row:
            if not isinstance(e, int):
                raise ArithmeticError("non-integral composition matrix entry")
    return rows


def shift_matrix(d: int, m: int = 1) -> tuple[tuple[int, ...], ...]:
    """Matrix of ``f(x) -> f(x + m)`` in binomial coordinates."""
    return composition_matrix(1, d, shift=m)


def mat_mul(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> tuple[tuple[int, ...], ...]:
    n, k, m = len(a), len(b), len(b[0])
    return tuple(
        tuple(sum(a[i][t] * b[t][j] for t in range(k)) for j in range(m)) for i in range(n)
    )


def mat_vec(a: Sequence[Sequence[int]], v: Sequence[Rational]) -> list:
    return [sum(a[i][j] * v[j] for j in range(len(v))) for i in range(len(a))]


def apply_composition(u: BinomialCoords, a: int = 1, shift: int = 0) -> BinomialCoords:
    return BinomialCoords(mat_vec(composition_matrix(a, u.d, shift), u.u))


def vandermonde(S: Iterable[int]) -> int:
    """``prod_{x > y in S} (x - y)``."""
    s = sorted(S)
    if len(set(s)) != len(s):
        raise ValueError("elements must be distinct")
    out = 1
    for i in range(len(s)):
        for j in range(i):
            out *= s[i] - s[j]
    return out


def superfactorial(d: int) -> int:
    """``prod_{n=1}^{d} n!``."""
    out = 1
    for n in range(1, d + 1):
        out *= factorial(n)
    return out


# --- multiplicative functions -------------------------------------------------


@lru_cache(maxsize=65536)
def factorize(n: int) -> tuple[tuple[int, int], ...]:
    if n < 1:
        raise ValueError("n must be positive")
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return tuple(out)


@dataclass(frozen=True)
class MultiplicativeFn:
    """Completely multiplicative ``+-1`` function.

    ``kind`` is ``"liouville"`` (``(-1)^Omega(n)``), ``"trivial"`` (constant 1),
    or ``"table"``: explicit values on primes up to ``bound``; primes above
    the bound are rejected.
    """

    kind: str = "liouville"
    prime_values: tuple[tuple[int, int], ...] = ()
    bound: int = 0

    @classmethod
    def liouville(cls) -> "MultiplicativeFn":
        return cls()

    @classmethod
    def trivial(cls) -> "MultiplicativeFn":
        return cls(kind="trivial")

    @classmethod
    def from_table(cls, values: Mapping[int, int], bound: int | None = None) -> "MultiplicativeFn":
        vals = {int(p): int(v) for p, v in values.items()}
        for p, v in vals.items():
            if v not in (1, -1):
                raise ValueError(f"value at {p} must be +1 or -1")
            if p < 2 or factorize(p) != ((p, 1),):
                raise ValueError(f"{p} is not prime")
        b = max(vals, default=1) if bound is None else int(bound)
        missing = [p for p in range(2, b + 1) if factorize(p) == ((p, 1),) and p not in vals]
        if missing:
            raise ValueError(f"table has no value for primes {missing[:5]}")
        return cls(kind="table", prime_values=tuple(sorted(vals.items())), bound=b)

    def prime_value(self, p: int) -> int:
        if self.kind == "liouville":
            return -1
        if self.kind == "trivial":
            return 1
        if p > self.bound:
            raise ValueError(f"prime {p} exceeds the table bound {self.bound}")
        return dict(self.prime_values)[p]

    def __call__(self, n: int) -> int:
        return lambda_eval(self, n)

    def describe(self) -> str:
        if self.kind != "table":
            return self.kind
        return "table[" + ",".join(f"{p}:{v:+d}" for p, v in self.prime_values) + "]"


def lambda_eval(lam: MultiplicativeFn, n: int) -> int:
    if n < 1:
        raise ValueError("n must be a positive integer")
    out = 1
    for p, e in factorize(n):
        v = lam.prime_value(p)
        if e & 1:
            out *= v
    return out


def liouville_table(n_max: int):
    """Array ``lam[n]`` of Liouville values for ``0 <= n <= n_max`` (``lam[0] = 0``)."""
    import numpy as np

    omega = np.zeros(n_max + 1, dtype=np.int64)
    rest = np.arange(n_max + 1, dtype=np.int64)
    for p in range(2, int(n_max**0.5) + 1):
        if rest[p] == p and omega[p] == 0:  # p prime
            pk = p
            while pk <= n_max:
                omega[pk::pk] += 1
                rest[pk::pk] //= p
                pk *= p
    omega[rest > 1] += 1
    lam = np.where(omega % 2 == 0, 1, -1).astype(np.int8)
    lam[0] = 0
    return lam
