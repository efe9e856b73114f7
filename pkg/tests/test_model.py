from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import chisquare

from signpat.bounds import chowla_correlation
from signpat.model import (
    ModelConfig,
    ModelPoint,
    PointBatch,
    Rho,
    apply_I,
    apply_I_batch,
    axiom_check,
    axiom_config_Q,
    correlation_mc,
    eval_F,
    eval_F_batch,
    gowers_mc,
    haar_sample,
    pushforward_test,
    rho_bar,
    rho_bar_batch,
    sample_batch,
    step_T,
    step_T_batch,
)
from signpat.poly import MultiplicativeFn, RationalPoly, from_binomial, to_binomial

RNG = np.random.default_rng(5)


def twisted(d=2, q=29, depth=2, Q=None):
    rho = Rho(q, int(RNG.integers(0, 1 << (q - 1 if q == 29 else 2))))
    return ModelConfig(d, q=q, rho=rho, depth=depth, Q=Q)


def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(1, q=5)
    with pytest.raises(ValueError):
        ModelConfig(1, q=5, rho=Rho(7, 0))
    with pytest.raises(ValueError):
        ModelConfig(1, q=5, rho=Rho(5, 0), Q=5)
    cfg = ModelConfig(1, q=5, rho=Rho(5, 0))
    assert cfg.Q == 25 and ModelConfig(1).Q == 1
    assert cfg.digest() == ModelConfig(1, q=5, rho=Rho(5, 0)).digest() != ModelConfig(1).digest()


def test_rho_strings():
    r = Rho.from_string(5, "+--+")
    assert str(r) == "+--+" and r.value(2) == -1 and r.value(4) == 1 and r.value(9) == 1
    with pytest.raises(ValueError):
        r.value(5)
    with pytest.raises(ValueError):
        Rho.from_string(5, "+-+")
    assert list(r.sign_table()) == [0, 1, -1, -1, 1]


def test_eval_F_examples():
    cfg = ModelConfig(1)
    assert eval_F(cfg, ModelPoint.from_coords([Fraction(1, 2), 0], None, 0, 1)) == 1
    assert eval_F(cfg, ModelPoint.from_coords([Fraction(3, 2), 0], None, 0, 1)) == -1


def test_step_T_shifts_the_polynomial():
    f = RationalPoly([Fraction(1, 16), Fraction(-5, 4), Fraction(7, 8)])
    g = RationalPoly([f(1), Fraction(-5, 4) + 2 * Fraction(7, 8), Fraction(7, 8)])  # f(x+1)
    cfg = ModelConfig(2)
    x = ModelPoint.from_coords(to_binomial(f).u, None, 3, 10)
    y = step_T(cfg, x)
    want = ModelPoint.from_coords(to_binomial(g).u, None, 4, 10)
    assert y == want
    for n in range(-3, 4):
        assert (from_binomial(y.coords)(n) - g(n)) % 2 == 0


def test_apply_I_example():
    # f(n) = n/2 at a point with M = 0 mod 6; I_2 gives f(2n) + 1 = n + 1
    cfg = ModelConfig(1)
    x = ModelPoint.from_coords([0, Fraction(1, 2)], None, 0, 6)
    y = apply_I(cfg, 2, x)
    assert y.coords.u == (Fraction(1), Fraction(1)) and (y.r, y.m) == (0, 3)
    with pytest.raises(ValueError):
        apply_I(cfg, 4, x)


def test_scalar_batch_agreement():
    cfg = twisted(d=2, Q=29**2 * 3600)
    b = sample_batch(cfg, 3, 0, 300, stride=29 * 3600)
    pts = [b.point(i) for i in range(len(b))]
    assert PointBatch.from_points(pts).point(7) == pts[7]
    F = eval_F_batch(cfg, b)
    T5 = step_T_batch(cfg, b, 5)
    for i, p in enumerate(pts[:100]):
        assert eval_F(cfg, p) == F[i]
        assert step_T(cfg, p, 5) == T5.point(i)
    for a in (2, 3, 6, 29, 58):
        Ia = apply_I_batch(cfg, a, b)
        for i in range(0, 300, 37):
            assert apply_I(cfg, a, pts[i]) == Ia.point(i)


def test_step_T_powers_compose():
    cfg = ModelConfig(3)
    b = sample_batch(cfg, 1, 0, 500)
    x = b
    for _ in range(7):
        x = step_T_batch(cfg, x)
    y = step_T_batch(cfg, b, 7)
    assert np.array_equal(x.U, y.U)


def test_sampling_is_counter_based():
    cfg = twisted(d=1)
    b = sample_batch(cfg, 9, 0, 50)
    c = sample_batch(cfg, 9, 20, 30)
    assert np.array_equal(b.U[20:], c.U) and list(b.r[20:]) == list(c.r)
    assert haar_sample(cfg, 9, 33) == b.point(33)
    assert not np.array_equal(sample_batch(cfg, 10, 0, 50).U, b.U)


def test_haar_marginals():
    cfg = twisted(d=2)
    n = 200_000
    b = sample_batch(cfg, 2, 0, n)
    u = b.U.astype(np.float64) / 2.0**53
    assert np.all(np.abs(u.mean(axis=0) - 1.0) < 0.01)
    F = eval_F_batch(cfg, b)
    assert abs(F.mean()) < 4 / np.sqrt(n)
    units = [t for t in range(1, 29)]
    counts = np.bincount(b.t, minlength=29)[units]
    assert chisquare(counts).pvalue > 0.001
    assert chisquare(np.bincount((b.r % 29).astype(np.int64), minlength=29)).pvalue > 0.001


def test_stride_conditioning():
    cfg = twisted(d=1, Q=29**2 * 12)
    b = sample_batch(cfg, 1, 0, 1000, stride=12, offset=5)
    assert all(r % 12 == 5 for r in b.r)
    with pytest.raises(ValueError):
        sample_batch(cfg, 1, 0, 10, stride=7)


def test_rho_bar_examples():
    rho = Rho.from_string(5, "+--+")
    cfg = ModelConfig(1, q=5, rho=rho)
    assert rho_bar(cfg, (0, 25)) == 1
    assert rho_bar(cfg, (3, 25)) == -1
    assert rho_bar(cfg, (5, 25)) == rho.value(1)
    assert rho_bar(cfg, (10, 25)) == rho.value(2)
    assert rho_bar(cfg, (5, 5)) == 1
    assert rho_bar(cfg, (50, 125)) == rho.value(2)
    cfg9 = ModelConfig(1, q=9, rho=Rho(9, 0b000101), depth=2)
    assert rho_bar(cfg9, (9, 81)) == -1 and rho_bar(cfg9, (18, 81)) == 1
    with pytest.raises(ValueError):
        rho_bar(cfg9, (27, 81))


def test_rho_bar_batch_matches_scalar():
    cfg = ModelConfig(1, q=12, rho=Rho(12, 0b1010), depth=3)
    m = 12**3 * 7
    res = np.arange(m, dtype=np.int64)
    ok = []
    for r in res.tolist():
        try:
            ok.append((r, rho_bar(cfg, (r, m))))
        except ValueError:
            pass
    rs = np.array([r for r, _ in ok])
    assert np.array_equal(rho_bar_batch(cfg, rs, m), [v for _, v in ok])
    assert len(ok) > m // 2


def test_axioms_hold():
    for cfg in (ModelConfig(1), twisted(d=1)):
        cfg = cfg.with_Q(axiom_config_Q(cfg, 8))
        rep = axiom_check(cfg, 1500, 8, 4)
        assert rep.ok, rep.record()


def test_constant_correlation_for_degree_zero():
    est = correlation_mc(ModelConfig(0), [1, 2], 20_000, 1)
    assert est.estimate == 1.0 and est.total == 20_000


def test_chowla_four_point_correlation():
    exact = float(chowla_correlation(2)[0])
    est = correlation_mc(ModelConfig(2), [1, 2, 3, 4], 300_000, 11, threads=4)
    assert abs(est.estimate - exact) < 4 * est.std_error


def test_estimates_do_not_depend_on_threads():
    cfg = twisted(d=1)
    a = correlation_mc(cfg, [0, 1], 150_000, 8, threads=1)
    b = correlation_mc(cfg, [0, 1], 150_000, 8, threads=4)
    assert a == b


def test_gowers_constant_model():
    cfg = ModelConfig(0, lam=MultiplicativeFn.trivial())
    assert gowers_mc(cfg, 2, 16, 5000, 1).estimate == 1.0


def test_gowers_small_for_liouville_model():
    est = gowers_mc(ModelConfig(1), 1, 64, 100_000, 2, hmods=[(1, 2)])
    assert abs(est.estimate) < 5 * est.std_error + 0.01


def test_gowers_empty_admissible_set():
    with pytest.raises(ValueError):
        gowers_mc(ModelConfig(1), 1, 4, 10, 0, hmods=[(5, 7)])
    with pytest.raises(ValueError):
        gowers_mc(ModelConfig(1), 2, 4, 10, 0, hmods=[(1, 2)] * 3)


@pytest.mark.parametrize("a", [1, 3])
def test_pushforward_uniform(a):
    cfg = twisted(d=1, q=5)
    cfg = cfg.with_Q(25 * 3 * 64)
    rep = pushforward_test(cfg, a, 16, 100_000, 7)
    assert min(rep.p_u) > 0.001 and rep.p_t > 0.001 and not rep.diagnostic
    assert rep.p_m is not None and rep.p_m > 0.001
