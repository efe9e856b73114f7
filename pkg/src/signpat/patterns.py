"""Sign patterns of degree-``d`` polynomials: exact enumeration and a sampling oracle.

A pattern of length ``k`` is stored as an integer bit mask: bit ``i`` holds
``eps_{i+1}``, with 0 meaning ``+1`` and 1 meaning ``-1``. For a polynomial
``f`` the pattern is ``((-1)^floor(f(n)))_{n=1..k}``.

Enumeration walks every support set ``S`` of ``d + 1`` points in ``1..k`` and
every polynomial integer-valued on ``S`` modulo even-integer-valued
polynomials (a finite set of coset representatives). Each such polynomial
``g`` is a candidate vertex of a cell; the patterns of the cells around it
follow from ``g``'s floors and the ways a small degree-``d`` perturbation can
change sign along the integer points of ``g``.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from itertools import combinations
from math import comb, floor
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import kernels
from .lattice import adjugate, coset_representatives, det_int, expected_coset_count, vertex_transform
from .poly import RationalPoly, comb_signed, evaluate, interpolate

log = logging.getLogger(__name__)

MAGIC = "SGNPAT1"
BITSET_MAX_K = 30
DEFAULT_BUDGET = 10**9


@dataclass(frozen=True, order=True)
class SignPattern:
    bits: int
    k: int

    def __post_init__(self):
        if self.k < 0 or self.bits < 0 or self.bits >> self.k:
            raise ValueError(f"bits {self.bits:#x} do not fit length {self.k}")

    @classmethod
    def from_signs(cls, signs: Sequence[int]) -> "SignPattern":
        bits = 0
        for i, s in enumerate(signs):
            if s == -1:
                bits |= 1 << i
            elif s != 1:
                raise ValueError(f"sign must be +1 or -1, got {s}")
        return cls(bits, len(signs))

    @classmethod
    def from_string(cls, s: str) -> "SignPattern":
        bits = 0
        for i, ch in enumerate(s):
            if ch == "-":
                bits |= 1 << i
            elif ch != "+":
                raise ValueError(f"bad pattern character {ch!r}")
        return cls(bits, len(s))

    @property
    def signs(self) -> tuple[int, ...]:
        return tuple(-1 if (self.bits >> i) & 1 else 1 for i in range(self.k))

    def __str__(self) -> str:
        return "".join("-" if (self.bits >> i) & 1 else "+" for i in range(self.k))

    def negate(self) -> "SignPattern":
        return SignPattern(self.bits ^ ((1 << self.k) - 1), self.k)


def pattern_of(f: RationalPoly, k: int) -> SignPattern:
    """``((-1)^floor(f(n)))_{n=1..k}`` computed exactly."""
    bits = 0
    for n in range(1, k + 1):
        if floor(evaluate(f, n)) & 1:
            bits |= 1 << (n - 1)
    return SignPattern(bits, k)


@dataclass
class PatternSet:
    """Deduplicated patterns of one length, stored sorted as an int64 array."""

    k: int
    d: int
    patterns: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.unique(np.asarray(self.patterns, dtype=np.int64))
        if arr.size and (arr[0] < 0 or (self.k < 63 and arr[-1] >> self.k)):
            raise ValueError("pattern does not fit the declared length")
        self.patterns = arr

    @property
    def exact_count(self) -> int:
        return int(self.patterns.size)

    def __len__(self) -> int:
        return self.exact_count

    def __iter__(self) -> Iterator[SignPattern]:
        for b in self.patterns.tolist():
            yield SignPattern(b, self.k)

    def __contains__(self, p: SignPattern | int) -> bool:
        b = p.bits if isinstance(p, SignPattern) else int(p)
        i = np.searchsorted(self.patterns, b)
        return bool(i < self.patterns.size and self.patterns[i] == b)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PatternSet):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.patterns, other.patterns)

    def as_set(self) -> set[int]:
        return set(self.patterns.tolist())

    def sign_matrix(self) -> np.ndarray:
        """``(count, k)`` int8 array of +-1 signs."""
        bits = (self.patterns[:, None] >> np.arange(self.k, dtype=np.int64)) & 1
        return (1 - 2 * bits).astype(np.int8)

    # canonical text form ---------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"{MAGIC} d={self.d} k={self.k} count={self.exact_count}"]
        if self.exact_count:
            chars = np.where(self.sign_matrix() < 0, ord("-"), ord("+")).astype(np.uint8)
            rows = [r.tobytes().decode("ascii") for r in chars]
            rows.sort()  # '+' (0x2b) sorts before '-' (0x2d)
            lines.extend(rows)
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode("ascii")).hexdigest()

    def save(self, path: str | Path) -> str:
        text = self.to_text()
        Path(path).write_bytes(text.encode("ascii"))
        return hashlib.sha256(text.encode("ascii")).hexdigest()

    @classmethod
    def from_text(cls, text: str) -> "PatternSet":
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines:
            raise ValueError("empty pattern-set file")
        head = lines[0].split()
        if len(head) != 4 or head[0] != MAGIC:
            raise ValueError(f"bad header {lines[0]!r}")
        try:
            kv = dict(item.split("=", 1) for item in head[1:])
            d, k, count = int(kv["d"]), int(kv["k"]), int(kv["count"])
        except (ValueError, KeyError) as exc:
            raise ValueError(f"bad header {lines[0]!r}") from exc
        body = lines[1:]
        if len(body) != count:
            raise ValueError(f"header declares {count} patterns, file has {len(body)}")
        if body != sorted(body) or len(set(body)) != len(body):
            raise ValueError("pattern lines must be sorted and unique")
        bits = []
        for line in body:
            if len(line) != k:
                raise ValueError(f"pattern {line!r} does not have length {k}")
            bits.append(SignPattern.from_string(line).bits)
        return cls(k, d, np.array(bits, dtype=np.int64))

    @classmethod
    def load(cls, path: str | Path) -> "PatternSet":
        return cls.from_text(Path(path).read_bytes().decode("ascii"))


# --- vertices -----------------------------------------------------------------


@dataclass(frozen=True)
class VertexCandidate:
    S: tuple[int, ...]
    values: tuple[int, ...]
    g: RationalPoly
    S_full: tuple[int, ...]

    @classmethod
    def build(cls, S: Sequence[int], values: Sequence[int], k: int) -> "VertexCandidate":
        S = tuple(sorted(S))
        d = len(S) - 1
        g = interpolate(list(zip(S, values)), d)
        full = tuple(n for n in range(1, k + 1) if evaluate(g, n).denominator == 1)
        return cls(S, tuple(int(v) for v in values), g, full)


def limited_change_subsets(points: Sequence[int], d: int) -> Iterator[frozenset[int]]:
    """Subsets of ``points`` whose indicator along the sorted points changes at most ``d`` times."""
    pts = sorted(points)
    m = len(pts)
    if m == 0:
        yield frozenset()
        return
    for nchg in range(min(d, m - 1) + 1):
        for cuts in combinations(range(1, m), nchg):
            for first in (True, False):
                members, inside, prev = [], first, 0
                for c in list(cuts) + [m]:
                    if inside:
                        members.extend(pts[prev:c])
                    inside = not inside
                    prev = c
                yield frozenset(members)


def vertex_patterns(cand: VertexCandidate, k: int) -> set[SignPattern]:
    """Patterns of the cells having ``cand.g`` as a vertex, derived exactly.

    Off the integer points the sign is fixed by ``floor(g(n))``; on an integer
    point ``n`` a cell lies either just above (``n`` in ``T``) or just below
    ``g(n)``.
    """
    d = cand.g.d
    out = set()
    vals = {n: evaluate(cand.g, n) for n in range(1, k + 1)}
    for T in limited_change_subsets(cand.S_full, d):
        signs = []
        for n in range(1, k + 1):
            v = vals[n]
            if n not in cand.S_full:
                e = floor(v)
            elif n in T:
                e = int(v)
            else:
                e = int(v) - 1
            signs.append(-1 if e & 1 else 1)
        out.add(SignPattern.from_signs(signs))
    return out


# --- enumeration --------------------------------------------------------------


class ResourceCeilingExceeded(RuntimeError):
    def __init__(self, message: str, *, predicted: int, budget: int, shards_done: int, shards_total: int, partial: int):
        super().__init__(message)
        self.predicted = predicted
        self.budget = budget
        self.shards_done = shards_done
        self.shards_total = shards_total
        self.partial = partial


def support_sets(k: int, d: int) -> Iterator[tuple[int, ...]]:
    return combinations(range(1, k + 1), d + 1)


def predicted_work(d: int, k: int) -> int:
    """Coset representatives times ``2^{d+1}`` cells each, summed over support sets."""
    total = 0
    for S in support_sets(k, d):
        total += expected_coset_count(S, d)
    return total * 2 ** (d + 1)


def _binom_table(k: int, d: int) -> np.ndarray:
    return np.array([[comb(n, j) for j in range(d + 1)] for n in range(1, k + 1)], dtype=np.int64)


def _shard_emit(S: tuple[int, ...], d: int, k: int, Cmat: np.ndarray, tab, tab_off, emit) -> np.ndarray:
    reps = coset_representatives(S, d)
    adj, D = vertex_transform(S, d)
    M = adj.T @ Cmat.T  # G[n] = sum_j U_j C(n, j), U = adj @ values
    bound = int(np.abs(reps).max(initial=0)) * int(np.abs(M).sum(axis=0).max(initial=0))
    if bound >= 1 << 62:
        raise OverflowError(f"vertex values overflow int64 for S={S}")
    return emit(reps, M, D, tab, tab_off)


def enumerate_patterns(
    d: int,
    k: int,
    *,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
    backend: str | None = None,
) -> PatternSet:
    """Exact image of ``f -> ((-1)^floor(f(n)))_{n=1..k}`` over degree-``<= d`` polynomials."""
    if d < 0 or k < 0:
        raise ValueError("d and k must be non-negative")
    if k > 62:
        raise ValueError("pattern length limited to 62")
    if k <= d + 1:
        # values at d+1 points are unconstrained
        return PatternSet(k, d, np.arange(1 << k, dtype=np.int64))

    predicted = predicted_work(d, k)
    shards = list(support_sets(k, d))
    if predicted > budget:
        raise ResourceCeilingExceeded(
            f"predicted {predicted} candidate patterns exceeds budget {budget}",
            predicted=predicted, budget=budget, shards_done=0, shards_total=len(shards), partial=0,
        )

    if backend is None:
        emit, insert = kernels.emit_vertex_patterns, kernels.bitset_insert
    elif backend == "numba":
        emit, insert = kernels.emit_vertex_patterns_numba, kernels.bitset_insert_numba
    elif backend == "numpy":
        emit, insert = kernels.emit_vertex_patterns_numpy, kernels.bitset_insert_numpy
    else:
        raise ValueError(f"unknown backend {backend!r}")

    Cmat = _binom_table(k, d)
    tab, tab_off = kernels.change_tables(k, d)
    use_bitset = k <= BITSET_MAX_K

    def run(chunk: Sequence[tuple[int, ...]]):
        acc = np.zeros(max(1, (1 << k) >> 6), dtype=np.uint64) if use_bitset else []
        emitted = 0
        for S in chunk:
            pats = _shard_emit(S, d, k, Cmat, tab, tab_off, emit)
            emitted += pats.size
            if use_bitset:
                insert(acc, pats)
            else:
                acc.append(np.unique(pats))
        return acc, emitted

    chunks = [shards[i::workers] for i in range(workers)] if workers > 1 else [shards]
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, chunks))
    else:
        results = [run(chunks[0])]

    total_emitted = sum(e for _, e in results)
    log.debug("enumerate d=%d k=%d: %d shards, %d candidates emitted", d, k, len(shards), total_emitted)
    if use_bitset:
        acc = results[0][0]
        for other, _ in results[1:]:
            acc |= other
        pats = kernels.bitset_members(acc)
    else:
        pats = np.unique(np.concatenate([p for r, _ in results for p in r]))
    return PatternSet(k, d, pats)


# --- sampling oracle ------------------------------------------------------------

FRAC_BITS = 53
_TORUS_MASK = np.uint64((1 << (FRAC_BITS + 1)) - 1)


def _patterns_from_units(U: np.ndarray, k: int) -> np.ndarray:
    """Patterns of polynomials with binomial coordinates ``U / 2^53`` (uint64 rows)."""
    d = U.shape[1] - 1
    out = np.zeros(U.shape[0], dtype=np.int64)
    for n in range(1, k + 1):
        acc = np.zeros(U.shape[0], dtype=np.uint64)
        for j in range(d + 1):
            acc += U[:, j] * np.uint64(comb(n, j) % (1 << 64))
        out |= ((acc >> np.uint64(FRAC_BITS)) & np.uint64(1)).astype(np.int64) << (n - 1)
    return out


def _jitter_sweep(d: int, k: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Patterns of rational points ``g`` pushed off by a tiny random polynomial.

    ``g`` interpolates random integers at random ``d + 1`` points, so it sits
    on many cell boundaries at once; ``g + eps * h`` lands inside one of the
    neighbouring cells. Everything is evaluated with exact integer arithmetic:
    for ``eps = 1 / (D * 2^e)`` with ``2^e`` exceeding ``|h(n)|``, the floor of
    ``g(n) + eps * h(n)`` is that of ``(D g(n) * 2^e + h(n)) / (D * 2^e)``.
    """
    if count <= 0 or k == 0:
        return np.empty(0, np.int64)
    ns = np.arange(1, k + 1)
    out = []
    hmax = 1 << 8
    hbound = hmax * sum(comb(k, j) for j in range(d + 1))
    e = hbound.bit_length() + 1
    per_set = max(1, count // max(1, comb(k, d + 1)))
    sets = list(support_sets(k, d))
    if not sets:
        # k <= d: no vertices, and uniform points already give every pattern
        return np.empty(0, np.int64)
    order = rng.permutation(len(sets))
    done = 0
    while done < count:
        for si in order:
            if done >= count:
                break
            S = sets[si]
            B = [[comb_signed(s, j) for j in range(d + 1)] for s in S]
            det = det_int(B)
            adj = np.array(adjugate(B), dtype=object)
            if det < 0:
                det, adj = -det, -adj
            m = min(per_set, count - done)
            vals = rng.integers(0, 2 * det, size=(m, d + 1)).astype(object)
            Ug = vals @ adj.T  # D * binomial coordinates of g
            H = rng.integers(-hmax, hmax + 1, size=(m, d + 1)).astype(object)
            Cn = np.array([[comb(int(n), j) for j in range(d + 1)] for n in ns], dtype=object)
            Gn = Ug @ Cn.T  # D * g(n)
            Hn = H @ Cn.T  # h(n) in the binomial basis
            zero = (Hn == 0) & (Gn % det == 0)
            num = Gn * (1 << e) + Hn
            fl = num // (det * (1 << e))
            bits = (fl % 2).astype(np.int64)
            pats = (bits << np.arange(k, dtype=np.int64)).sum(axis=1)
            # a zero of h at an integer point of g leaves the point on a boundary
            out.append(pats[~zero.any(axis=1)])
            done += m
    return np.concatenate(out) if out else np.empty(0, np.int64)


def sample_patterns(d: int, k: int, trials: int, seed: int, *, sweep: int | None = None) -> PatternSet:
    """Patterns observed at random and structured points; always a subset of the image.

    ``trials`` uniform points ``u in [0, 2)^{d+1}`` with 53 fractional bits
    (floors exact), plus the zero polynomial, plus ``sweep`` perturbed
    rational points (default: as many as ``trials``).
    """
    if trials < 0:
        raise ValueError("trials must be non-negative")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), d, k]))
    found = [np.zeros(1, dtype=np.int64)]  # the zero polynomial
    step = 1 << 18
    for start in range(0, trials, step):
        m = min(step, trials - start)
        U = rng.integers(0, 1 << (FRAC_BITS + 1), size=(m, d + 1), dtype=np.uint64)
        found.append(np.unique(_patterns_from_units(U, k)))
    n_sweep = trials if sweep is None else sweep
    if n_sweep and k > 0:
        found.append(np.unique(_jitter_sweep(d, k, n_sweep, rng)))
    return PatternSet(k, d, np.unique(np.concatenate(found)))


def brute_patterns_from_polys(polys: Iterable[RationalPoly], k: int, d: int) -> PatternSet:
    return PatternSet(k, d, np.array([pattern_of(f, k).bits for f in polys], dtype=np.int64))


def project_prefix(ps: PatternSet) -> PatternSet:
    """Drop the last symbol of every pattern."""
    return PatternSet(ps.k - 1, ps.d, ps.patterns & ((1 << (ps.k - 1)) - 1))


def project_suffix(ps: PatternSet) -> PatternSet:
    """Drop the first symbol of every pattern."""
    return PatternSet(ps.k - 1, ps.d, ps.patterns >> 1)


def negate(ps: PatternSet) -> PatternSet:
    return PatternSet(ps.k, ps.d, ps.patterns ^ ((1 << ps.k) - 1))

