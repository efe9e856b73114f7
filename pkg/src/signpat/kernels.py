"""Hot inner loops, each with a numba and a pure-numpy implementation.

The public names (``emit_vertex_patterns``, ``bitset_insert``,
``fill_bad_set``, ``find_exclusion_witness``) dispatch to the backend picked
in :mod:`signpat._accel`. The ``*_numba`` / ``*_numpy`` variants are exported
for cross-checks and benchmarks.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np

from ._accel import USE_NUMBA, njit

# --- change-limited indicator strings -----------------------------------------


@lru_cache(maxsize=64)
def change_tables(m_max: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Bit masks over ``m`` positions whose indicator changes value at most ``d`` times.

    Returns ``(flat, offsets)``; masks for length ``m`` are
    ``flat[offsets[m]:offsets[m + 1]]``, for ``0 <= m <= m_max``.
    """
    if m_max > 62:
        raise ValueError("indicator strings are limited to 62 positions")
    flat: list[int] = []
    offsets = [0]
    for m in range(m_max + 1):
        if m == 0:
            flat.append(0)
        else:
            for nchg in range(min(d, m - 1) + 1):
                for cuts in combinations(range(1, m), nchg):
                    for first in (0, 1):
                        mask, bit, prev = 0, first, 0
                        for c in list(cuts) + [m]:
                            if bit:
                                mask |= ((1 << (c - prev)) - 1) << prev
                            bit ^= 1
                            prev = c
                        flat.append(mask)
        offsets.append(len(flat))
    return np.array(flat, dtype=np.int64), np.array(offsets, dtype=np.int64)


# --- vertex emission ----------------------------------------------------------


@njit(cache=True, nogil=True)
def _emit_numba(reps, start, M, D, tab, tab_off, out):
    R = reps.shape[0]
    dp1 = M.shape[0]
    k = M.shape[1]
    pos = np.empty(k, np.int64)
    cap = out.shape[0]
    n_out = 0
    for r in range(start, R):
        base = 0
        m = 0
        for n in range(k):
            g = 0
            for j in range(dp1):
                g += reps[r, j] * M[j, n]
            fl = g // D
            if g - fl * D == 0:
                pos[m] = n
                m += 1
            if fl & 1:
                base |= 1 << n
        lo = tab_off[m]
        hi = tab_off[m + 1]
        if n_out + (hi - lo) > cap:
            return r, n_out
        for t in range(lo, hi):
            w = tab[t]
            flip = 0
            for i in range(m):
                if (w >> i) & 1:
                    flip |= 1 << pos[i]
            out[n_out] = base ^ flip
            n_out += 1
    return R, n_out


def emit_vertex_patterns_numba(reps, M, D, tab, tab_off, chunk: int = 1 << 20) -> np.ndarray:
    reps = np.ascontiguousarray(reps, dtype=np.int64)
    M = np.ascontiguousarray(M, dtype=np.int64)
    max_t = int(np.max(np.diff(tab_off)))
    out = np.empty(max(chunk, max_t), dtype=np.int64)
    parts = []
    start = 0
    while start < reps.shape[0]:
        start, n = _emit_numba(reps, start, M, np.int64(D), tab, tab_off, out)
        parts.append(out[:n].copy())
    return np.concatenate(parts) if parts else np.empty(0, np.int64)


def emit_vertex_patterns_numpy(reps, M, D, tab, tab_off) -> np.ndarray:
    reps = np.asarray(reps, dtype=np.int64)
    k = M.shape[1]
    G = reps @ np.asarray(M, dtype=np.int64)
    fl = np.floor_divide(G, D)
    on_int = (G - fl * D) == 0
    weights = np.left_shift(np.int64(1), np.arange(k, dtype=np.int64))
    base = ((fl & 1) * weights).sum(axis=1)
    mcount = on_int.sum(axis=1)
    parts = []
    for m in np.unique(mcount):
        rows = np.nonzero(mcount == m)[0]
        masks = tab[tab_off[m]:tab_off[m + 1]]
        if m == 0:
            parts.append(base[rows])
            continue
        pos = np.nonzero(on_int[rows])[1].reshape(len(rows), m)
        posbits = np.left_shift(np.int64(1), pos)
        sel = ((masks[:, None] >> np.arange(m, dtype=np.int64)) & 1)  # (nT, m)
        flip = posbits @ sel.T
        parts.append((base[rows, None] ^ flip).ravel())
    return np.concatenate(parts) if parts else np.empty(0, np.int64)


# --- bitsets --------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _bitset_insert_numba(bits, vals):
    for v in vals:
        bits[v >> 6] |= np.uint64(1) << np.uint64(v & 63)


def bitset_insert_numba(bits: np.ndarray, vals: np.ndarray) -> None:
    _bitset_insert_numba(bits, np.asarray(vals, dtype=np.int64))


def bitset_insert_numpy(bits: np.ndarray, vals: np.ndarray) -> None:
    vals = np.asarray(vals, dtype=np.int64)
    np.bitwise_or.at(bits, vals >> 6, np.left_shift(np.uint64(1), (vals & 63).astype(np.uint64)))


def bitset_members(bits: np.ndarray) -> np.ndarray:
    """Sorted indices of set bits."""
    nz = np.nonzero(bits)[0]
    if nz.size == 0:
        return np.empty(0, np.int64)
    unpacked = np.unpackbits(bits[nz].view(np.uint8).reshape(-1, 8), axis=1, bitorder="little")
    word, bit = np.nonzero(unpacked)
    return (nz[word].astype(np.int64) << 6) + bit.astype(np.int64)


def bitset_popcount(bits: np.ndarray) -> int:
    return int(np.bitwise_count(bits).sum(dtype=np.int64))


# --- bad-set construction -----------------------------------------------------


def _targets(q: int, t: int, n: int, unit_pos: np.ndarray) -> np.ndarray:
    """Unit position receiving pattern index ``i`` for the pair ``(t, n)``; -1 if none."""
    w = (n + np.arange(1, q + 1)) % q
    tgt = unit_pos[(t * w) % q].copy()
    tgt[unit_pos[w] < 0] = -1
    return tgt


@njit(cache=True, nogil=True)
def _fill_bad_numba(pats, eps, q, units, unit_pos, bits):
    tgt = np.empty(q, np.int64)
    for t in units:
        for n in range(q):
            for i in range(q):
                w = (n + i + 1) % q
                if unit_pos[w] >= 0:
                    tgt[i] = unit_pos[(t * w) % q]
                else:
                    tgt[i] = -1
            for p in pats:
                x = p ^ eps
                idx = 0
                for i in range(q):
                    if tgt[i] >= 0 and (x >> i) & 1:
                        idx |= 1 << tgt[i]
                bits[idx >> 6] |= np.uint64(1) << np.uint64(idx & 63)


def fill_bad_set_numba(pats, eps: int, q: int, units, unit_pos, bits) -> None:
    _fill_bad_numba(
        np.asarray(pats, dtype=np.int64),
        np.int64(eps),
        np.int64(q),
        np.asarray(units, dtype=np.int64),
        np.asarray(unit_pos, dtype=np.int64),
        bits,
    )


def fill_bad_set_numpy(pats, eps: int, q: int, units, unit_pos, bits) -> None:
    pats = np.asarray(pats, dtype=np.int64)
    x = pats ^ np.int64(eps)
    xbits = ((x[:, None] >> np.arange(q, dtype=np.int64)) & 1).astype(np.int64)
    unit_pos = np.asarray(unit_pos, dtype=np.int64)
    for t in units:
        for n in range(q):
            tgt = _targets(q, int(t), n, unit_pos)
            w = np.where(tgt >= 0, np.left_shift(np.int64(1), np.maximum(tgt, 0)), 0)
            bitset_insert_numpy(bits, xbits @ w)


# --- independent exclusion check ------------------------------------------------


@njit(cache=True, nogil=True)
def _witness_numba(psigns, esigns, q, units, is_unit, rho_sign):
    npat = psigns.shape[0]
    for a in range(npat):
        for t in units:
            for n in range(q):
                differs = False
                for i in range(q):
                    w = (n + i + 1) % q
                    if is_unit[w]:
                        if esigns[i] != psigns[a, i] * rho_sign[(t * w) % q]:
                            differs = True
                            break
                if not differs:
                    return a, t, n
    return -1, -1, -1


def find_exclusion_witness_numba(psigns, esigns, q, units, is_unit, rho_sign):
    a, t, n = _witness_numba(
        np.ascontiguousarray(psigns, dtype=np.int8),
        np.asarray(esigns, dtype=np.int8),
        np.int64(q),
        np.asarray(units, dtype=np.int64),
        np.asarray(is_unit, dtype=np.bool_),
        np.asarray(rho_sign, dtype=np.int8),
    )
    return None if a < 0 else (int(a), int(t), int(n))


def find_exclusion_witness_numpy(psigns, esigns, q, units, is_unit, rho_sign):
    psigns = np.asarray(psigns, dtype=np.int8)
    esigns = np.asarray(esigns, dtype=np.int8)
    rho_sign = np.asarray(rho_sign, dtype=np.int8)
    is_unit = np.asarray(is_unit, dtype=bool)
    for t in units:
        for n in range(q):
            w = (n + np.arange(1, q + 1)) % q
            keep = is_unit[w]
            target = rho_sign[(int(t) * w[keep]) % q]
            differs = (psigns[:, keep] * target[None, :] != esigns[None, keep]).any(axis=1)
            bad = np.nonzero(~differs)[0]
            if bad.size:
                return int(bad[0]), int(t), n
    return None


if USE_NUMBA:
    emit_vertex_patterns = emit_vertex_patterns_numba
    bitset_insert = bitset_insert_numba
    fill_bad_set = fill_bad_set_numba
    find_exclusion_witness = find_exclusion_witness_numba
else:
    emit_vertex_patterns = emit_vertex_patterns_numpy
    bitset_insert = bitset_insert_numpy
    fill_bad_set = fill_bad_set_numpy
    find_exclusion_witness = find_exclusion_witness_numpy
