"""Acceptance criteria, one verdict line each.

Criteria 7 to 10 run through the command line so their manifests can be
replayed by criterion 12.
"""

import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from signpat.bounds import chowla_closed_form, chowla_correlation, counting_certificate, main2_threshold, mainbound_exact, minimal_q
from signpat.cli import main
from signpat.patterns import enumerate_patterns, negate, project_prefix, project_suffix, sample_patterns
from signpat.props import check_back1, check_back2
from signpat.report import parse_record

MANIFESTS: list[Path] = []


@pytest.fixture(scope="module")
def outdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


def cli(*argv) -> int:
    return main([str(a) for a in argv], _quiet=True)


def records(path: Path) -> list[dict]:
    return [parse_record(block) for block in path.read_text().strip().split("\n\n")]


def produced(path: Path) -> None:
    MANIFESTS.append(Path(f"{path}.manifest"))


def test_criterion_01_constants(verdict, outdir):
    t0 = time.perf_counter()
    want = {1: Fraction(8, 3), 2: Fraction(4, 3), 3: Fraction(16, 45)}
    got = {}
    for d in want:
        out = outdir / f"c{d}.txt"
        assert cli("bound", "--formula", "c", "--d", d, "--out", out) == 0
        got[d] = Fraction(records(out)[0]["value"])
    dt = time.perf_counter() - t0
    ok = got == want and dt < 1
    verdict(1, ok, f"c_1..3 = {', '.join(map(str, got.values()))} (want 8/3, 4/3, 16/45) in {dt:.2f}s")
    assert got[1] == want[1] and got[2] == want[2] and dt < 1
    assert got[3] == want[3]


def test_criterion_02_threshold(verdict):
    t0 = time.perf_counter()
    q = minimal_q(1)
    below = [q2 for q2 in range(2, 29) if main2_threshold(1, q2)]
    dt = time.perf_counter() - t0
    ok = q == 29 and not below and dt < 1
    verdict(2, ok, f"minimal_q(1) = {q}, thresholds passing below 29: {below} in {dt:.2f}s")
    assert ok


def test_criterion_03_oracle(verdict):
    t0 = time.perf_counter()
    bad = []
    for d in range(3):
        for k in range(1, 9):
            if sample_patterns(d, k, 10**6, 1000 + 10 * d + k) != enumerate_patterns(d, k):
                bad.append((d, k))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 300
    verdict(3, ok, f"sampled == enumerated for d<=2, k<=8; mismatches {bad} in {dt:.1f}s")
    assert ok


def test_criterion_04_bound(verdict, workers):
    t0 = time.perf_counter()
    cases = [(d, k) for d in range(3) for k in range(1, 30)] + [(3, k) for k in range(1, 13)]
    bad = []
    worst = Fraction(0)
    for d, k in cases:
        n = enumerate_patterns(d, k, workers=workers).exact_count
        mb = mainbound_exact(d, k) if k >= d + 1 else Fraction(2**k)
        worst = max(worst, Fraction(n) / mb)
        if n > mb:
            bad.append((d, k))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 1800
    verdict(4, ok, f"count <= mainbound on {len(cases)} cases, max ratio {float(worst):.4f}, violations {bad} in {dt:.1f}s")
    assert ok


def test_criterion_05_small_length(verdict):
    n14 = enumerate_patterns(1, 4).exact_count
    free = {d: enumerate_patterns(d, d + 1).exact_count for d in range(5)}
    ok = n14 == 16 and all(free[d] == 2 ** (d + 1) for d in free)
    verdict(5, ok, f"|P(1,4)| = {n14}; |P(d,d+1)| = {list(free.values())}")
    assert ok


def test_criterion_06_closure(verdict):
    bad = []
    for d in range(3):
        prev = enumerate_patterns(d, 1)
        for k in range(2, 11):
            cur = enumerate_patterns(d, k)
            if not (project_prefix(cur) == prev and project_suffix(cur) == prev and negate(cur) == cur):
                bad.append((d, k))
            prev = cur
    verdict(6, not bad, f"prefix, suffix and negation closure for d<=2, k<=10; failures {bad}")
    assert not bad


def test_criterion_07_chowla(verdict, outdir, workers):
    t0 = time.perf_counter()
    target = float(chowla_closed_form(2)[0])
    rows = []
    for shifts, want in (("1,2,3,4", target), ("1,2,3", 0.0), ("1,2", 0.0)):
        out = outdir / f"corr_{shifts.replace(',', '')}.txt"
        assert cli("correlate", "--d", 2, "--shifts", shifts, "--n", 10**6, "--seed", 7, "--threads", workers, "--out", out) == 0
        produced(out)
        rec = records(out)[0]
        est, se = float(rec["estimate"]), float(rec["std_error"])
        rows.append((shifts, est, se, want, abs(est - want) <= 4 * se))
    dt = time.perf_counter() - t0
    ok = all(r[4] for r in rows) and dt < 600
    detail = "; ".join(f"{{{s}}} {e:.5f}+-{se:.5f} vs {w:.5f} ({abs(e - w) / se:.1f} SE)" for s, e, se, w, _ in rows)
    exact = float(chowla_correlation(2)[0])
    e4, se4 = rows[0][1], rows[0][2]
    verdict(7, ok, f"{detail}; exact model value 1/27 is {abs(e4 - exact) / se4:.1f} SE away; in {dt:.1f}s")
    for s, e, se, w, good in rows:
        assert good, f"shifts {s}: {e} is {abs(e - w) / se:.1f} SE from {w}"


@pytest.mark.parametrize("hmod", [None, "1:2"])
def test_criterion_08_gowers(verdict, outdir, workers, hmod):
    tag = "plain" if hmod is None else "odd"
    out = outdir / f"gowers_{tag}.txt"
    extra = [] if hmod is None else ["--hmod", hmod]
    assert cli("gowers", "--d", 1, "--order", 1, "--H", "32,128,512", "--n", 10**5, "--seed", 21, "--threads", workers, "--out", out, *extra) == 0
    produced(out)
    recs = records(out)
    est = [abs(float(r["estimate"])) for r in recs]
    se = [float(r["std_error"]) for r in recs]
    mono = all(est[i + 1] <= est[i] + 2 * max(se[i], se[i + 1]) for i in range(2))
    ok = mono and est[2] <= 0.05
    verdict(8, ok, f"[{tag}] |U| at H=32,128,512: {', '.join(f'{e:.4f}' for e in est)} (SE {se[2]:.4f})")
    assert ok


def test_criterion_09_axioms(verdict, outdir, workers):
    t0 = time.perf_counter()
    results = []
    configs = [("--d", d) for d in range(3)] + [("--d", 1, "--q", 29)]
    for i, flags in enumerate(configs):
        out = outdir / f"axioms_{i}.txt"
        code = cli("axioms", *flags, "--samples", 10**4, "--amax", 30, "--seed", 5, "--threads", workers, "--out", out)
        produced(out)
        rec = records(out)[0]
        nviol = sum(int(rec[f"violations_{j}"]) for j in range(1, 6))
        results.append((" ".join(map(str, flags)), code, nviol))
    dt = time.perf_counter() - t0
    ok = all(code == 0 and n == 0 for _, code, n in results) and dt < 300
    verdict(9, ok, f"violations {[(f, n) for f, _, n in results]} in {dt:.1f}s")
    assert ok


def test_criterion_10_twist(verdict, outdir, workers):
    t0 = time.perf_counter()
    pats = outdir / "patterns_1_29.txt"
    assert cli("enumerate", "--d", 1, "--k", 29, "--threads", workers, "--out", pats) == 0
    produced(pats)
    rng = np.random.default_rng(2029)
    epsilons = {"all-plus": "+" * 29, "random": "".join(rng.choice(["+", "-"], size=29))}
    rows = []
    for name, eps in epsilons.items():
        cert = outdir / f"cert_{name}.txt"
        code = cli("rho-search", "--d", 1, "--q", 29, "--epsilon", eps, "--patterns", pats, "--cert", cert, "--threads", workers)
        if code != 0:
            rows.append((name, None, False, False, False))
            continue
        produced(cert)
        rec = records(cert)[0]
        bad = int(rec["bad_count"])
        count = enumerate_patterns(1, 29).exact_count
        certified = counting_certificate(1, 29, count)
        verified = cli("rho-verify", "--cert", cert, "--patterns", pats) == 0
        rows.append((name, bad, bad < 2**28, certified, verified))
    dt = time.perf_counter() - t0
    ok = all(r[2] and r[3] and r[4] for r in rows)
    detail = "; ".join(f"{n}: bad_count={b} counting={c} verified={v}" for n, b, _, c, v in rows)
    verdict(10, ok, f"{detail} in {dt:.1f}s")
    assert ok


def test_criterion_11_props(verdict):
    rows = []
    # r = ceil(d/2) is 0 at d = 0, where the bound is not defined
    for d in (1, 2, 3):
        r = -(-d // 2)
        rows.append((f"back1 d={d} r={r}", check_back1(d, r, range(1, 11)).passed))
    for d, r in ((1, 1), (2, 1)):
        rows.append((f"back2 d={d} r={r}", check_back2(enumerate_patterns(d, 2 * r + 2), r).passed))
    ok = all(p for _, p in rows)
    verdict(11, ok, ", ".join(f"{n}: {'ok' if p else 'fail'}" for n, p in rows))
    assert ok


def test_criterion_12_replay(verdict, outdir):
    if not MANIFESTS:
        pytest.skip("criteria 7-10 did not run in this session")
    bad = []
    for man in MANIFESTS:
        if cli("replay", man) != 0:
            bad.append(man.name)
    ok = not bad
    verdict(12, ok, f"replayed {len(MANIFESTS)} manifests; mismatches {bad}")
    assert ok
