from math import gcd

import numpy as np
import pytest

from signpat import kernels
from signpat.model import Rho
from signpat.patterns import PatternSet, SignPattern, enumerate_patterns
from signpat.rho import (
    ExclusionCertificate,
    build_bad_set,
    check_certificate,
    determined_rho,
    exclusion_witness,
    find_good_rho,
    search,
    verify_exclusion,
)

RNG = np.random.default_rng(17)


def random_eps(q):
    return SignPattern(int(RNG.integers(0, 1 << q)), q)


def brute_bad(q, eps, patterns):
    """Every rho for which some (p, t, n) reproduces eps, by direct search."""
    units = [t for t in range(1, q) if gcd(t, q) == 1]
    bad = set()
    for bits in range(1 << len(units)):
        rho = Rho(q, bits)
        hit = False
        for p in patterns:
            for t in units:
                for n in range(q):
                    ok = True
                    for i in range(1, q + 1):
                        w = (n + i) % q
                        if gcd(w, q) != 1:
                            continue
                        if rho.value(t * w) * p.signs[i - 1] != eps.signs[i - 1]:
                            ok = False
                            break
                    if ok:
                        hit = True
                        break
                if hit:
                    break
            if hit:
                break
        if hit:
            bad.add(bits)
    return bad


def test_determined_rho_example():
    eps = SignPattern.from_string("+++++")
    P = SignPattern.from_string("+++-+")
    # position 4 has n + i = 6 = 1 mod 5, so rho(2 * 1) = -1
    rho = determined_rho(P, 2, 2, eps)
    assert str(rho) == "+-++"
    assert rho.value(2) == -1 and rho.value(4) == 1
    with pytest.raises(ValueError):
        determined_rho(P, 5, 0, eps)


@pytest.mark.parametrize("q", [5, 7, 8, 9, 10, 12])
def test_bad_set_matches_brute_force(q):
    ps = enumerate_patterns(1, q)
    sub = PatternSet(q, 1, ps.patterns[RNG.choice(ps.exact_count, size=min(12, ps.exact_count), replace=False)])
    for _ in range(2):
        eps = random_eps(q)
        want = brute_bad(q, eps, list(sub))
        got = build_bad_set(1, q, eps, sub)
        assert set(kernels.bitset_members(got._valid()).tolist()) == want
        assert got.bad_count == len(want)


def test_backends_and_threads_agree():
    q = 13
    ps = enumerate_patterns(1, q)
    eps = random_eps(q)
    a = build_bad_set(1, q, eps, ps, backend="numba")
    b = build_bad_set(1, q, eps, ps, backend="numpy")
    c = build_bad_set(1, q, eps, ps, threads=4)
    assert np.array_equal(a.bits, b.bits) and np.array_equal(a.bits, c.bits)


def test_determined_triples_are_bad_and_others_verify():
    q = 11
    ps = enumerate_patterns(1, q)
    eps = random_eps(q)
    bad = build_bad_set(1, q, eps, ps)
    for _ in range(50):
        p = SignPattern(int(ps.patterns[RNG.integers(ps.exact_count)]), q)
        t = int(RNG.integers(1, q))
        n = int(RNG.integers(q))
        rho = determined_rho(p, t, n, eps)
        assert rho in bad
        assert not verify_exclusion(1, q, eps, rho, ps)
    for _ in range(50):
        rho = Rho(q, int(RNG.integers(0, 1 << 10)))
        assert (rho in bad) == (not verify_exclusion(1, q, eps, rho, ps))


def test_witness_backends_agree():
    q = 11
    ps = enumerate_patterns(1, q)
    eps = random_eps(q)
    is_unit = np.array([gcd(w, q) == 1 for w in range(q)])
    units = np.nonzero(is_unit)[0]
    for bits in range(0, 1 << 10, 37):
        args = (ps.sign_matrix(), np.array(eps.signs, dtype=np.int8), q, units, is_unit, Rho(q, bits).sign_table())
        a = kernels.find_exclusion_witness_numba(*args)
        b = kernels.find_exclusion_witness_numpy(*args)
        assert (a is None) == (b is None)
        for w in (a, b):
            if w is not None:
                pi, t, n = w
                p = SignPattern(int(ps.patterns[pi]), q)
                assert determined_rho(p, t, n, eps) == Rho(q, bits)


def test_empty_pattern_set_excludes_everything():
    q = 7
    empty = PatternSet(q, 1, np.zeros(0, dtype=np.int64))
    bad = build_bad_set(1, q, random_eps(q), empty)
    assert bad.bad_count == 0
    assert find_good_rho(bad) == Rho(q, 0)
    assert exclusion_witness(q, random_eps(q), Rho(q, 5), empty) is None


def test_small_q_has_no_survivor():
    # every pattern of length 3 is polynomial for d = 1
    q = 3
    res = search(1, q, random_eps(q), enumerate_patterns(1, q))
    assert res.rho is None and res.bad.bad_count == 4


def test_phi_limit():
    eps = SignPattern(0, 37)
    with pytest.raises(MemoryError):
        build_bad_set(1, 37, eps, PatternSet(37, 1, np.zeros(0, dtype=np.int64)))


def test_search_and_certificate_round_trip(tmp_path):
    q = 17
    ps = enumerate_patterns(1, q)
    eps = SignPattern.from_string("+" * q)
    res = search(1, q, eps, ps)
    cert = res.certificate
    assert cert is not None and cert.verified
    path = tmp_path / "cert.txt"
    cert.save(path)
    back = ExclusionCertificate.load(path)
    assert back == cert
    assert check_certificate(back, ps).ok


def test_tampered_certificate_rejected(tmp_path):
    q = 17
    ps = enumerate_patterns(1, q)
    eps = SignPattern.from_string("+" * q)
    cert = search(1, q, eps, ps).certificate
    text = cert.to_text()
    for old, new in [
        (f"bad_count={cert.bad_count}", f"bad_count={cert.bad_count + 1}"),
        (f"rho={cert.rho}", "rho=" + "+" * 16),
        ("verified=true", "verified=false"),
        (f"pattern_set_digest={cert.pattern_set_digest}", "pattern_set_digest=" + "0" * 64),
    ]:
        bad = ExclusionCertificate.from_text(text.replace(old, new))
        chk = check_certificate(bad, ps)
        assert not chk.ok and chk.reasons
    with pytest.raises(ValueError):
        ExclusionCertificate.from_text("d=1\nq=17\n")
    with pytest.raises(ValueError):
        ExclusionCertificate.from_text(text.replace("verified=true", "verified=yes"))
