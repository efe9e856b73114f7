from fractions import Fraction
from itertools import combinations
from math import factorial

import numpy as np
import pytest
import sympy

from signpat.bounds import (
    back1_lower_bound,
    bernoulli,
    c_constant,
    chowla_closed_form,
    chowla_correlation,
    counting_certificate,
    double_factorial_odd,
    main2_threshold,
    mainbound_exact,
    minimal_q,
    shelah_vertex_bound,
    to_decimal,
    totient,
    units_mod,
    vandermonde_sum,
    zeta_even_over_pi,
)
from signpat.poly import vandermonde


def test_totient_matches_sympy():
    for n in range(1, 400):
        assert totient(n) == sympy.totient(n)
        assert len(units_mod(n)) == (sympy.totient(n) if n > 1 else 0)


def test_bernoulli_matches_sympy():
    assert bernoulli(1) == Fraction(-1, 2)
    for n in [0] + list(range(2, 31)):
        b = sympy.bernoulli(n)
        assert bernoulli(n) == Fraction(int(b.p), int(b.q))


def test_zeta_even_matches_sympy():
    for s in range(2, 21, 2):
        z = sympy.nsimplify(sympy.zeta(s) / sympy.pi**s)
        assert zeta_even_over_pi(s) == Fraction(int(z.p), int(z.q))
    with pytest.raises(ValueError):
        zeta_even_over_pi(3)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_vandermonde_sum_brute(d):
    for k in range(d + 1, 13):
        brute = sum(vandermonde(S) for S in combinations(range(1, k + 1), d + 1))
        assert vandermonde_sum(d, k) == brute


def test_mainbound_examples():
    # d = 0: 4/2 * k
    assert mainbound_exact(0, 7) == 14
    # d = 1: 16/3 * C(k+1, 3)
    assert mainbound_exact(1, 3) == Fraction(16 * 4, 3)
    with pytest.raises(ValueError):
        mainbound_exact(2, 2)


def test_c_constant_values():
    assert c_constant(1) == Fraction(8, 3)
    assert c_constant(2) == Fraction(4, 3)
    # the ratio c_{d+1}/c_d = 4 / ((d+3) (d+1)!) fixes c_3 from c_2
    assert c_constant(3) == Fraction(8, 45)
    for d in range(1, 8):
        assert c_constant(d + 1) / c_constant(d) == Fraction(4, (d + 3) * factorial(d + 1))


@pytest.mark.parametrize("d", [1, 2, 3])
def test_mainbound_below_leading_term(d):
    e = (d + 1) * (d + 2) // 2
    for k in range(d + 1, 30):
        assert mainbound_exact(d, k) <= c_constant(d) * k**e


def test_threshold_and_minimal_q():
    assert [minimal_q(d) for d in range(1, 7)] == [29, 47, 73, 109, 157, 211]
    for d in (1, 2, 3):
        q = minimal_q(d)
        assert main2_threshold(d, q) and not main2_threshold(d, q - 1)


@pytest.mark.parametrize("d", [1, 2])
def test_threshold_implies_counting(d):
    q = minimal_q(d)
    n = int(mainbound_exact(d, q))
    assert counting_certificate(d, q, n)
    assert not counting_certificate(d, q, 2**totient(q))


def test_small_helpers():
    assert [double_factorial_odd(r) for r in range(5)] == [1, 1, 3, 15, 105]
    assert back1_lower_bound(4, 2) == Fraction(32, 3)
    assert shelah_vertex_bound(3, 1) == 6
    assert shelah_vertex_bound(5, 4) == 32
    assert to_decimal(Fraction(1, 3), 5) == "0.33333"


def test_chowla_closed_form_values():
    v0, _ = chowla_closed_form(0)
    v2, s2 = chowla_closed_form(2)
    assert v0 == Fraction(-16, 9)
    assert v2 == Fraction(256, 6075)
    assert s2.startswith("0.0421399176954732510288065843621399176954732510288")
    with pytest.raises(ValueError):
        chowla_closed_form(1)


def _square_wave_correlation(d: int, n: int) -> float:
    # midpoint rule on [0,2)^{d+1}; the integrand is piecewise constant
    s = d + 2
    cs = [(-1) ** (s - 1 - t) * sympy.binomial(s - 1, t - 1) for t in range(1, s)]
    g = (np.arange(n) + 0.5) * (2.0 / n)
    Y = np.meshgrid(*([g] * (d + 1)), indexing="ij")
    last = sum(int(c) * y for c, y in zip(cs, Y))
    val = np.ones_like(last)
    for y in list(Y) + [last]:
        val *= 1 - 2 * (np.floor(y) % 2)
    return float(val.mean())


@pytest.mark.parametrize("d,n", [(0, 2000), (2, 150)])
def test_chowla_correlation_matches_quadrature(d, n):
    exact, _ = chowla_correlation(d)
    assert exact == (1 if d == 0 else Fraction(1, 27))
    assert abs(_square_wave_correlation(d, n) - float(exact)) < 0.01
