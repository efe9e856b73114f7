"""Torus dynamical models and Monte Carlo estimators.

A point is ``(u, t, n)``: binomial coordinates ``u`` of a polynomial modulo
even-integer-valued polynomials, an optional unit ``t`` mod ``q``, and a
finite-precision profinite integer ``n = (r, m)`` meaning ``r mod m``.

Coordinates are stored as integers in units of ``2^-53``. Since the lattice
is ``2 Z^{d+1}``, each coordinate lives in ``[0, 2^54)`` and every map is an
integer matrix, so all arithmetic is exact modulo ``2^54`` (numpy ``uint64``
wraparound followed by a mask). ``floor(u_0)`` is bit 53.

Randomness is counter based: sample ``i`` of stream ``s`` under seed ``k``
always reads the same Philox block, so batches and single draws agree and
estimates do not depend on how the work is split.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from math import comb, lcm, sqrt
from typing import Sequence

import numpy as np

from .bounds import totient, units_mod
from .poly import BinomialCoords, MultiplicativeFn, composition_matrix, factorize

FRAC_BITS = 53
ONE = 1 << FRAC_BITS
TORUS = 1 << (FRAC_BITS + 1)
_MASK = np.uint64(TORUS - 1)
_SHIFT53 = np.uint64(FRAC_BITS)
CHUNK = 1 << 16

STREAM_POINTS = 0
STREAM_SHIFTS = 1


# --- twists -------------------------------------------------------------------


@dataclass(frozen=True)
class Rho:
    """``+-1`` function on the units mod ``q``; bit ``i`` refers to the ``i``-th unit in ascending order."""

    q: int
    bits: int

    def __post_init__(self):
        if self.q < 2:
            raise ValueError("q must be at least 2")
        if self.bits < 0 or self.bits >> totient(self.q):
            raise ValueError(f"rho bits do not fit phi({self.q}) = {totient(self.q)}")

    @property
    def units(self) -> tuple[int, ...]:
        return _units(self.q)

    @property
    def phi(self) -> int:
        return len(self.units)

    @classmethod
    def all_plus(cls, q: int) -> "Rho":
        return cls(q, 0)

    @classmethod
    def from_string(cls, q: int, s: str) -> "Rho":
        s = s.strip()
        if len(s) != totient(q):
            raise ValueError(f"rho string has length {len(s)}, expected phi({q}) = {totient(q)}")
        bits = 0
        for i, ch in enumerate(s):
            if ch == "-":
                bits |= 1 << i
            elif ch != "+":
                raise ValueError(f"bad rho character {ch!r}")
        return cls(q, bits)

    def __str__(self) -> str:
        return "".join("-" if (self.bits >> i) & 1 else "+" for i in range(self.phi))

    def value(self, t: int) -> int:
        t %= self.q
        idx = _unit_index(self.q).get(t)
        if idx is None:
            raise ValueError(f"{t} is not a unit mod {self.q}")
        return -1 if (self.bits >> idx) & 1 else 1

    def sign_table(self) -> np.ndarray:
        """``tab[t]`` is ``rho(t)`` for units and 0 elsewhere."""
        tab = np.zeros(self.q, dtype=np.int8)
        for i, t in enumerate(self.units):
            tab[t] = -1 if (self.bits >> i) & 1 else 1
        return tab


@lru_cache(maxsize=64)
def _units(q: int) -> tuple[int, ...]:
    return tuple(units_mod(q))


@lru_cache(maxsize=64)
def _unit_index(q: int) -> dict[int, int]:
    return {t: i for i, t in enumerate(_units(q))}


def _vp(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("valuation of 0")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


# --- configuration and points -------------------------------------------------------


@dataclass(frozen=True)
class ModelConfig:
    d: int
    lam: MultiplicativeFn = field(default_factory=MultiplicativeFn.liouville)
    q: int | None = None
    rho: Rho | None = None
    Q: int | None = None
    depth: int = 2

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("d must be non-negative")
        if (self.q is None) != (self.rho is None):
            raise ValueError("a twist needs both q and rho")
        if self.rho is not None and self.rho.q != self.q:
            raise ValueError("rho is defined for a different modulus")
        if self.depth < 1:
            raise ValueError("depth must be positive")
        if self.Q is None:
            object.__setattr__(self, "Q", self.q**self.depth if self.twisted else 1)
        if self.Q < 1:
            raise ValueError("Q must be positive")
        if self.twisted and self.Q % self.q**self.depth:
            raise ValueError(f"Q must be divisible by q^depth = {self.q ** self.depth}")

    @property
    def twisted(self) -> bool:
        return self.q is not None

    def canonical(self) -> str:
        twist = f"q={self.q};rho={self.rho}" if self.twisted else "q=none"
        return f"d={self.d};lam={self.lam.describe()};{twist};Q={self.Q};depth={self.depth}"

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def with_Q(self, Q: int) -> "ModelConfig":
        return replace(self, Q=Q)


@dataclass(frozen=True)
class ModelPoint:
    u: tuple[int, ...]  # units of 2^-53, each in [0, 2^54)
    t: int | None
    r: int
    m: int

    def __post_init__(self):
        if any(not 0 <= x < TORUS for x in self.u):
            raise ValueError("torus coordinates must lie in [0, 2)")
        if not 0 <= self.r < self.m:
            raise ValueError("residue out of range")

    @property
    def coords(self) -> BinomialCoords:
        return BinomialCoords(Fraction(x, ONE) for x in self.u)

    @classmethod
    def from_coords(cls, u: Sequence[Fraction], t: int | None, r: int, m: int) -> "ModelPoint":
        units = []
        for c in u:
            v = Fraction(c) * ONE
            if v.denominator != 1:
                raise ValueError(f"{c} is not a multiple of 2^-53")
            units.append(int(v) % TORUS)
        return cls(tuple(units), t, r % m, m)


def eval_M(x: ModelPoint) -> tuple[int, int]:
    return x.r, x.m


@lru_cache(maxsize=512)
def _matrix(a: int, d: int, shift: int) -> tuple[tuple[int, ...], ...]:
    return composition_matrix(a, d, shift)


def _matvec_mod(A, u: Sequence[int]) -> tuple[int, ...]:
    return tuple(sum(a * x for a, x in zip(row, u)) % TORUS for row in A)


def _offset(lam: MultiplicativeFn, a: int) -> int:
    # (1 - lam(a)) / 2, so that (-1)^offset = lam(a)
    return 0 if lam(a) == 1 else 1


def _split_unit(a: int, q: int) -> int:
    """Part of ``a`` coprime to ``q``."""
    out = a
    for p, _ in factorize(q):
        while out % p == 0:
            out //= p
    return out


def rho_bar(config: ModelConfig, n: tuple[int, int]) -> int:
    """Extension of ``rho`` to profinite integers, evaluated at ``r mod m``.

    Primes dividing ``q`` are stripped from ``r``; a residue divisible by the
    whole retained power of some such prime stands for a zero projection and
    gives +1.
    """
    if not config.twisted:
        raise ValueError("model has no twist")
    r, m = n
    q = config.q
    r %= m
    fac = factorize(q)
    pe = []
    for p, k in fac:
        e = _vp(m, p)
        if e < k:
            raise ValueError(f"modulus {m} is not divisible by {p}^{k}; need depth >= 1")
        pe.append((p, k, e))
    for p, _, e in pe:
        if r % p**e == 0:
            return 1
    for p, k, e in pe:
        v = _vp(r, p)
        if e - v < k:
            need = -(-(v + k) // k)
            raise ValueError(f"modulus {m} too small to decide rho_bar: need depth >= {need} at p={p}")
        r //= p**v
        m //= p**v
    return config.rho.value(r % q)


def eval_F(config: ModelConfig, x: ModelPoint) -> int:
    s = -1 if (x.u[0] >> FRAC_BITS) & 1 else 1
    if config.twisted:
        s *= rho_bar(config, ((x.t * x.r) % x.m, x.m))
    return s


def step_T(config: ModelConfig, x: ModelPoint, steps: int = 1) -> ModelPoint:
    u = x.u
    A = _matrix(1, config.d, 1)
    for _ in range(steps):
        u = _matvec_mod(A, u)
    return ModelPoint(u, x.t, (x.r + steps) % x.m, x.m)


def apply_I(config: ModelConfig, a: int, x: ModelPoint) -> ModelPoint:
    if a < 1:
        raise ValueError("a must be a positive integer")
    if x.r % a or x.m % a:
        raise ValueError(f"{a} does not divide M(x) = {x.r} mod {x.m}")
    u = list(_matvec_mod(_matrix(a, config.d, 0), x.u))
    u[0] = (u[0] + _offset(config.lam, a) * ONE) % TORUS
    t = x.t
    if config.twisted:
        t = (_split_unit(a, config.q) * t) % config.q
    return ModelPoint(tuple(u), t, x.r // a, x.m // a)


# --- batches ---------------------------------------------------------------------


@dataclass
class PointBatch:
    U: np.ndarray  # (n, d+1) uint64
    t: np.ndarray | None  # (n,) int64
    r: np.ndarray  # (n,) object
    m: np.ndarray  # (n,) object

    def __len__(self) -> int:
        return self.U.shape[0]

    def point(self, i: int) -> ModelPoint:
        t = None if self.t is None else int(self.t[i])
        return ModelPoint(tuple(int(v) for v in self.U[i]), t, int(self.r[i]), int(self.m[i]))

    @classmethod
    def from_points(cls, pts: Sequence[ModelPoint]) -> "PointBatch":
        U = np.array([p.u for p in pts], dtype=np.uint64)
        t = None if pts[0].t is None else np.array([p.t for p in pts], dtype=np.int64)
        r = np.array([p.r for p in pts] + [None], dtype=object)[:-1]
        m = np.array([p.m for p in pts] + [None], dtype=object)[:-1]
        return cls(U, t, r, m)


def _philox_words(seed: int, stream: int, index0: int, n: int, width: int) -> np.ndarray:
    if seed < 0 or seed >= 1 << 64:
        raise ValueError("seed must fit in 64 unsigned bits")
    blocks = -(-width // 4)
    bg = np.random.Philox(key=seed + (stream << 64), counter=index0 * blocks)
    return bg.random_raw(n * blocks * 4).reshape(n, blocks * 4)[:, :width]


def _residue_words(Q: int) -> int:
    return (Q.bit_length() + 64 + 63) // 64


def _words_to_int(W: np.ndarray) -> np.ndarray:
    acc = np.zeros(W.shape[0], dtype=object)
    for i in range(W.shape[1] - 1, -1, -1):
        acc = (acc * (1 << 64)) + W[:, i].astype(object)
    return acc


def _uniform_below(w: np.ndarray, n: int) -> np.ndarray:
    """Map 64-bit words to ``[0, n)`` by multiply-shift on the top 32 bits."""
    if n >= 1 << 32:
        raise ValueError("range too large")
    return ((w >> np.uint64(32)) * np.uint64(n)) >> np.uint64(32)


def sample_batch(
    config: ModelConfig, seed: int, index0: int, n: int, *, stride: int = 1, offset: int = 0
) -> PointBatch:
    """Haar samples ``index0 .. index0 + n - 1``; the residue is conditioned to ``offset mod stride``."""
    Q = config.Q
    if Q % stride:
        raise ValueError(f"stride {stride} does not divide Q = {Q}")
    d = config.d
    nw = _residue_words(Q)
    W = _philox_words(seed, STREAM_POINTS, index0, n, d + 2 + nw)
    U = W[:, : d + 1] >> np.uint64(64 - FRAC_BITS - 1)
    t = None
    if config.twisted:
        units = np.array(_units(config.q), dtype=np.int64)
        t = units[_uniform_below(W[:, d + 1], len(units)).astype(np.int64)]
    X = _words_to_int(W[:, d + 2:])
    r = (offset + stride * (X % (Q // stride))) % Q
    m = np.full(n, Q, dtype=object)
    return PointBatch(np.ascontiguousarray(U), t, r, m)


def haar_sample(config: ModelConfig, seed: int, index: int) -> ModelPoint:
    return sample_batch(config, seed, index, 1).point(0)


def _matrix_u64(a: int, d: int, shift: int) -> np.ndarray:
    A = _matrix(a, d, shift)
    return np.array([[e % (1 << 64) for e in row] for row in A], dtype=np.uint64)


def step_T_batch(config: ModelConfig, b: PointBatch, steps: int = 1) -> PointBatch:
    A = _matrix_u64(1, config.d, steps)
    U = (b.U @ A.T) & _MASK
    return PointBatch(U, b.t, (b.r + steps) % b.m, b.m)


def apply_I_batch(config: ModelConfig, a: int, b: PointBatch) -> PointBatch:
    if a < 1:
        raise ValueError("a must be a positive integer")
    bad = np.nonzero((b.r % a != 0) | (b.m % a != 0))[0]
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"{a} does not divide M(x) = {b.r[i]} mod {b.m[i]} (sample {i})")
    U = (b.U @ _matrix_u64(a, config.d, 0).T) & _MASK
    U[:, 0] = (U[:, 0] + np.uint64(_offset(config.lam, a) * ONE)) & _MASK
    t = b.t
    if config.twisted:
        t = (_split_unit(a, config.q) * t) % config.q
    return PointBatch(U, t, b.r // a, b.m // a)


@lru_cache(maxsize=32)
def _rho_bar_table(q: int, rho_bits: int, mq: int) -> np.ndarray:
    """``rho_bar`` on every residue mod ``mq`` (a product of powers of primes dividing ``q``).

    Residues the modulus is too coarse to decide get 0.
    """
    rho = Rho(q, rho_bits)
    signs = rho.sign_table()
    x = np.arange(mq, dtype=np.int64)
    out = np.zeros(mq, dtype=np.int8)
    done = np.zeros(mq, dtype=bool)
    undecided = np.zeros(mq, dtype=bool)
    fac = [(p, k, _vp(mq, p)) for p, k in factorize(q)]
    for p, _, e in fac:
        zero = (x % p**e) == 0
        out[zero & ~done] = 1
        done |= zero
    red = x.copy()
    for p, k, e in fac:
        v = np.zeros(mq, dtype=np.int64)
        y = red.copy()
        live = ~done
        while True:
            div = live & (y % p == 0)
            if not div.any():
                break
            y[div] //= p
            v[div] += 1
        red = np.where(live, y, red)
        undecided |= live & (e - v < k)
    live = ~done & ~undecided
    out[live] = signs[red[live] % q]
    return out


def _q_part(m: int, q: int) -> int:
    out = 1
    for p, _ in factorize(q):
        out *= p ** _vp(m, p)
    return out


def rho_bar_batch(config: ModelConfig, res: np.ndarray, m: int) -> np.ndarray:
    """Vectorized :func:`rho_bar` on residues ``res`` (object or int array) modulo a common ``m``."""
    mq = _q_part(m, config.q)
    for p, k in factorize(config.q):
        if _vp(mq, p) < k:
            raise ValueError(f"modulus {m} is not divisible by {p}^{k}")
    tab = _rho_bar_table(config.q, config.rho.bits, mq)
    idx = np.asarray(res % mq).astype(np.int64)
    out = tab[idx]
    bad = np.nonzero(out == 0)[0]
    if bad.size:
        raise ValueError(f"modulus {m} too small to decide rho_bar at residue {res[bad[0]]}; raise depth")
    return out


def eval_F_batch(config: ModelConfig, b: PointBatch) -> np.ndarray:
    s = 1 - 2 * ((b.U[:, 0] >> _SHIFT53) & np.uint64(1)).astype(np.int8)
    if config.twisted:
        ms = set(b.m.tolist())
        if len(ms) != 1:
            raise ValueError("batch mixes moduli")
        m = ms.pop()
        s = s * rho_bar_batch(config, (b.t.astype(object) * b.r) % m, m)
    return s.astype(np.int8)


def _same(b1: PointBatch, b2: PointBatch) -> np.ndarray:
    ok = np.all(b1.U == b2.U, axis=1) & (b1.r == b2.r) & (b1.m == b2.m)
    if b1.t is not None:
        ok &= b1.t == b2.t
    return ok.astype(bool)


# --- axioms --------------------------------------------------------------------


@dataclass
class AxiomReport:
    samples: int
    a_max: int
    violations: dict[int, int]
    witnesses: dict[int, str]

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())

    def record(self) -> dict:
        rec = {"samples": self.samples, "amax": self.a_max}
        for ax in sorted(self.violations):
            rec[f"violations_{ax}"] = self.violations[ax]
        for ax in sorted(self.witnesses):
            rec[f"witness_{ax}"] = self.witnesses[ax]
        rec["ok"] = self.ok
        return rec


def lcm_upto(n: int) -> int:
    out = 1
    for i in range(2, n + 1):
        out = lcm(out, i)
    return out


def axiom_config_Q(config: ModelConfig, a_max: int) -> int:
    """Smallest sensible ``Q`` for :func:`axiom_check`: ``lcm(1..a_max)^2`` times ``q^depth``."""
    L = lcm_upto(a_max)
    return L * L * (config.q**config.depth if config.twisted else 1)


def axiom_check(config: ModelConfig, samples: int, a_max: int, seed: int) -> AxiomReport:
    """Check the five identities on conditioned Haar samples with ``lcm(1..a_max)^2 | M(x)``."""
    L = lcm_upto(a_max)
    if config.Q % (L * L):
        raise ValueError(f"Q must be divisible by lcm(1..{a_max})^2 = {L * L}")
    x = sample_batch(config, seed, 0, samples, stride=L * L)
    viol = {i: 0 for i in range(1, 6)}
    wit: dict[int, str] = {}

    def note(ax: int, ok: np.ndarray, what: str) -> None:
        bad = np.nonzero(~ok)[0]
        if bad.size:
            viol[ax] += int(bad.size)
            wit.setdefault(ax, f"sample={int(bad[0])} {what}")

    I = {a: apply_I_batch(config, a, x) for a in range(1, a_max + 1)}
    Tx = step_T_batch(config, x)
    Fx = eval_F_batch(config, x)

    # (2) M(Tx) = M(x) + 1
    note(2, (Tx.r == (x.r + 1) % x.m) & (Tx.m == x.m), "T")
    Tpow = x
    for a in range(1, a_max + 1):
        Ia = I[a]
        # (1) a M(I_a x) = M(x)
        note(1, (Ia.r * a == x.r) & (Ia.m * a == x.m), f"a={a}")
        # (3) T(I_a x) = I_a(T^a x)
        Tpow = step_T_batch(config, Tpow)
        note(3, _same(step_T_batch(config, Ia), apply_I_batch(config, a, Tpow)), f"a={a}")
        # (5) F(I_a x) = lam(a) F(x)
        note(5, eval_F_batch(config, Ia) == config.lam(a) * Fx, f"a={a}")
    cache: dict[int, PointBatch] = {}
    for a in range(1, a_max + 1):
        for b in range(1, a_max + 1):
            ab = a * b
            if ab not in cache:
                cache[ab] = apply_I_batch(config, ab, x)
            # (4) I_b(I_a x) = I_{ab} x
            note(4, _same(apply_I_batch(config, b, I[a]), cache[ab]), f"a={a} b={b}")
    return AxiomReport(samples, a_max, viol, wit)


# --- estimators ----------------------------------------------------------------------


@dataclass(frozen=True)
class Estimate:
    estimate: float
    std_error: float
    total: int  # exact sum of the +-1 observations
    N: int

    @classmethod
    def from_sum(cls, total: int, N: int) -> "Estimate":
        mean = total / N
        var = max(0.0, 1.0 - mean * mean)
        if N > 1:
            var *= N / (N - 1)
        return cls(mean, sqrt(var / N), total, N)


def _binom_u64(shifts: np.ndarray, d: int) -> np.ndarray:
    """``C(s, j) mod 2^64`` for each shift ``s``, shape ``(len(shifts), d+1)``."""
    uniq, inv = np.unique(shifts, return_inverse=True)
    tab = np.array([[comb(int(s), j) % (1 << 64) for j in range(d + 1)] for s in uniq], dtype=np.uint64)
    return tab[inv.ravel()].reshape(*np.shape(shifts), d + 1)


def _floor_parity_at(U: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Parity of ``floor(f(s))`` where row ``C`` holds ``C(s, j)``; ``C`` broadcastable to ``U``."""
    acc = (U * C).sum(axis=1, dtype=np.uint64)
    return ((acc >> _SHIFT53) & np.uint64(1)).astype(np.int8)


def _F_shifted(config: ModelConfig, b: PointBatch, s: np.ndarray, C: np.ndarray) -> np.ndarray:
    """``F(T^s x)`` for per-sample shifts ``s`` with precomputed binomials ``C``."""
    val = 1 - 2 * _floor_parity_at(b.U, C)
    if config.twisted:
        m = config.Q
        val = val * rho_bar_batch(config, (b.t.astype(object) * (b.r + s.astype(object))) % m, m)
    return val.astype(np.int8)


def _chunks(N: int, size: int = CHUNK) -> list[tuple[int, int]]:
    return [(i, min(size, N - i)) for i in range(0, N, size)]


def _run_chunks(fn, N: int, threads: int) -> int:
    parts = _chunks(N)
    if threads > 1 and len(parts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return sum(ex.map(lambda p: fn(*p), parts))
    return sum(fn(*p) for p in parts)


def correlation_mc(
    config: ModelConfig, shifts: Sequence[int], N: int, seed: int, *, threads: int = 1
) -> Estimate:
    """Monte Carlo ``E prod_i F(T^{c_i} x)`` under Haar measure."""
    if N < 1:
        raise ValueError("N must be positive")
    if any(c < 0 for c in shifts):
        raise ValueError("shifts must be non-negative")
    d = config.d
    Cs = [_binom_u64(np.array([c]), d)[0] for c in shifts]

    def chunk(i0: int, n: int) -> int:
        b = sample_batch(config, seed, i0, n)
        prod = np.ones(n, dtype=np.int8)
        for c, C in zip(shifts, Cs):
            prod *= _F_shifted(config, b, np.full(n, c, dtype=np.int64), C[None, :])
        return int(prod.sum(dtype=np.int64))

    return Estimate.from_sum(_run_chunks(chunk, N, threads), N)


def _admissible(H: int, cond: tuple[int, int] | None) -> np.ndarray:
    hs = np.arange(1, H + 1, dtype=np.int64)
    if cond is not None:
        r, m = cond
        if m < 1:
            raise ValueError("congruence modulus must be positive")
        hs = hs[hs % m == r % m]
    if hs.size == 0:
        raise ValueError(f"no h in [1, {H}] satisfies h = {cond[0]} mod {cond[1]}")
    return hs


def gowers_mc(
    config: ModelConfig,
    order: int,
    H: int,
    N: int,
    seed: int,
    *,
    hmods: Sequence[tuple[int, int]] = (),
    xmod: tuple[int, int] | None = None,
    threads: int = 1,
) -> Estimate:
    """Finite-``H`` Gowers average ``E_{h, x} prod_{delta} F(T^{delta . h} x)``.

    ``hmods`` holds either one congruence applied to every ``h_i`` or one per
    ``h_i``; ``xmod`` conditions ``M(x)``.
    """
    if order < 1 or H < 1 or N < 1:
        raise ValueError("order, H and N must be positive")
    hmods = list(hmods)
    if len(hmods) == 1:
        hmods = hmods * order
    if hmods and len(hmods) != order:
        raise ValueError(f"expected 1 or {order} congruences on h")
    adm = [_admissible(H, hmods[i] if hmods else None) for i in range(order)]
    stride, offset = 1, 0
    if xmod is not None:
        offset, stride = xmod[0] % xmod[1], xmod[1]
        if config.Q % stride:
            config = config.with_Q(lcm(config.Q, stride))
    d = config.d
    deltas = [[(mask >> i) & 1 for i in range(order)] for mask in range(1 << order)]

    def chunk(i0: int, n: int) -> int:
        b = sample_batch(config, seed, i0, n, stride=stride, offset=offset)
        W = _philox_words(seed, STREAM_SHIFTS, i0, n, order)
        h = np.stack([adm[i][_uniform_below(W[:, i], adm[i].size).astype(np.int64)] for i in range(order)], axis=1)
        prod = np.ones(n, dtype=np.int8)
        for delta in deltas:
            s = h @ np.array(delta, dtype=np.int64)
            prod *= _F_shifted(config, b, s, _binom_u64(s, d))
        return int(prod.sum(dtype=np.int64))

    return Estimate.from_sum(_run_chunks(chunk, N, threads), N)


@dataclass
class PushforwardReport:
    a: int
    N: int
    bins: int
    chi2_u: list[float]
    p_u: list[float]
    chi2_t: float | None
    p_t: float | None
    chi2_m: float | None
    p_m: float | None
    diagnostic: bool

    def record(self) -> dict:
        rec = {"a": self.a, "N": self.N, "bins": self.bins}
        for j, (c, p) in enumerate(zip(self.chi2_u, self.p_u)):
            rec[f"chi2_u{j}"] = f"{c:.6f}"
            rec[f"p_u{j}"] = f"{p:.6f}"
        for name in ("t", "m"):
            c, p = getattr(self, f"chi2_{name}"), getattr(self, f"p_{name}")
            if c is not None:
                rec[f"chi2_{name}"] = f"{c:.6f}"
                rec[f"p_{name}"] = f"{p:.6f}"
        rec["diagnostic"] = self.diagnostic
        return rec


def pushforward_test(config: ModelConfig, a: int, bins: int, N: int, seed: int) -> PushforwardReport:
    """Histogram ``I_a x`` for Haar ``x`` conditioned on ``a | M(x)``; chi-square against uniform.

    Even ``a`` is reported as a diagnostic only.
    """
    from scipy.stats import chisquare

    if config.Q % a:
        raise ValueError(f"a={a} does not divide Q={config.Q}")
    if not 1 <= bins <= 1 << 10:
        raise ValueError("bins must be in [1, 1024]")
    b = apply_I_batch(config, a, sample_batch(config, seed, 0, N, stride=a))
    chi_u, p_u = [], []
    for j in range(config.d + 1):
        idx = ((b.U[:, j] * np.uint64(bins)) >> np.uint64(FRAC_BITS + 1)).astype(np.int64)
        res = chisquare(np.bincount(idx, minlength=bins))
        chi_u.append(float(res.statistic))
        p_u.append(float(res.pvalue))
    chi_t = p_t = None
    if config.twisted:
        units = _units(config.q)
        lut = np.full(config.q, -1, dtype=np.int64)
        lut[list(units)] = np.arange(len(units))
        res = chisquare(np.bincount(lut[b.t], minlength=len(units)))
        chi_t, p_t = float(res.statistic), float(res.pvalue)
    chi_m = p_m = None
    if (config.Q // a) % bins == 0 and bins > 1:
        res = chisquare(np.bincount((b.r % bins).astype(np.int64), minlength=bins))
        chi_m, p_m = float(res.statistic), float(res.pvalue)
    return PushforwardReport(a, N, bins, chi_u, p_u, chi_t, p_t, chi_m, p_m, diagnostic=(a % 2 == 0))


__all__ = [
    "AxiomReport",
    "Estimate",
    "ModelConfig",
    "ModelPoint",
    "PointBatch",
    "PushforwardReport",
    "Rho",
    "apply_I",
    "apply_I_batch",
    "axiom_check",
    "axiom_config_Q",
    "correlation_mc",
    "eval_F",
    "eval_F_batch",
    "eval_M",
    "gowers_mc",
    "haar_sample",
    "lcm_upto",
    "pushforward_test",
    "rho_bar",
    "rho_bar_batch",
    "sample_batch",
    "step_T",
    "step_T_batch",
]
