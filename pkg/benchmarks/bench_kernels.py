"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 3]

Both backends are run on identical inputs and their results compared, so a
speedup is only reported for matching output.
"""

from __future__ import annotations

import argparse
import time
from math import gcd

import numpy as np

from signpat import kernels
from signpat.model import Rho
from signpat.patterns import SignPattern, enumerate_patterns
from signpat.rho import build_bad_set


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_enumerate(repeat: int):
    d, k = 2, 20
    a = enumerate_patterns(d, k, backend="numba")
    b = enumerate_patterns(d, k, backend="numpy")
    assert a == b
    return (
        f"enumerate d={d} k={k}",
        best_of(lambda: enumerate_patterns(d, k, backend="numba"), repeat),
        best_of(lambda: enumerate_patterns(d, k, backend="numpy"), repeat),
    )


def bench_bitset(repeat: int):
    rng = np.random.default_rng(0)
    vals = rng.integers(0, 1 << 26, size=4_000_000)

    def run(fn):
        bits = np.zeros(1 << 20, dtype=np.uint64)
        fn(bits, vals)
        return bits

    assert np.array_equal(run(kernels.bitset_insert_numba), run(kernels.bitset_insert_numpy))
    return (
        "bitset insert 4e6",
        best_of(lambda: run(kernels.bitset_insert_numba), repeat),
        best_of(lambda: run(kernels.bitset_insert_numpy), repeat),
    )


def bench_bad_set(repeat: int):
    q = 23
    ps = enumerate_patterns(1, q)
    eps = SignPattern(0, q)
    a = build_bad_set(1, q, eps, ps, backend="numba")
    b = build_bad_set(1, q, eps, ps, backend="numpy")
    assert np.array_equal(a.bits, b.bits)
    return (
        f"bad set q={q}",
        best_of(lambda: build_bad_set(1, q, eps, ps, backend="numba"), repeat),
        best_of(lambda: build_bad_set(1, q, eps, ps, backend="numpy"), repeat),
    )


def bench_witness(repeat: int):
    q = 19
    ps = enumerate_patterns(1, q)
    is_unit = np.array([gcd(w, q) == 1 for w in range(q)])
    units = np.nonzero(is_unit)[0]
    # a twist with no witness forces the full scan
    bad = build_bad_set(1, q, SignPattern(0, q), ps)
    rho = next(Rho(q, i) for i in range(1 << (q - 1)) if Rho(q, i) not in bad)
    args = (ps.sign_matrix(), np.ones(q, dtype=np.int8), q, units, is_unit, rho.sign_table())
    assert kernels.find_exclusion_witness_numba(*args) is None
    assert kernels.find_exclusion_witness_numpy(*args) is None
    return (
        f"exclusion scan q={q}",
        best_of(lambda: kernels.find_exclusion_witness_numba(*args), repeat),
        best_of(lambda: kernels.find_exclusion_witness_numpy(*args), repeat),
    )


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'kernel':<24}{'numba s':>10}{'numpy s':>10}{'ratio':>8}")
    for bench in (bench_enumerate, bench_bitset, bench_bad_set, bench_witness):
        name, tn, tp = bench(args.repeat)
        print(f"{name:<24}{tn:>10.4f}{tp:>10.4f}{tp / tn:>8.1f}")


if __name__ == "__main__":
    main()
