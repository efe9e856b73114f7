"""Search for a twist ``rho`` under which a given sign pattern cannot appear.

For a pattern set ``P`` of length ``q`` and a target ``eps``, each triple
``(p, t, n)`` with ``p in P``, ``t`` a unit and ``n`` a residue forces the
values of ``rho`` on every unit: ``rho(t (n + i)) = eps_i p_i`` whenever
``n + i`` is invertible. The bad set collects all forced ``rho``; any ``rho``
outside it excludes ``eps``.
"""

from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import gcd
from pathlib import Path

import numpy as np

from . import kernels
from .bounds import totient
from .model import Rho, _units
from .patterns import PatternSet, SignPattern

log = logging.getLogger(__name__)

MAX_PHI = 30


@dataclass
class BadSet:
    q: int
    bits: np.ndarray  # uint64 words, bit index = rho encoding

    @property
    def phi(self) -> int:
        return totient(self.q)

    @property
    def bad_count(self) -> int:
        return kernels.bitset_popcount(self._valid())

    def _valid(self) -> np.ndarray:
        n = 1 << self.phi
        if n >= 64:
            return self.bits
        return self.bits & np.uint64((1 << n) - 1)

    def __contains__(self, rho: Rho) -> bool:
        return bool((int(self.bits[rho.bits >> 6]) >> (rho.bits & 63)) & 1)


def _unit_positions(q: int) -> np.ndarray:
    pos = np.full(q, -1, dtype=np.int64)
    for i, t in enumerate(_units(q)):
        pos[t] = i
    return pos


def determined_rho(P: SignPattern, t: int, n: int, eps: SignPattern) -> Rho:
    """The unique ``rho`` making ``eps`` match ``P`` at every invertible position of the window at ``n``."""
    q = eps.k
    if P.k != q:
        raise ValueError("pattern lengths differ")
    if gcd(t, q) != 1:
        raise ValueError(f"{t} is not a unit mod {q}")
    pos = _unit_positions(q)
    bits = 0
    for i in range(1, q + 1):
        w = (n + i) % q
        if pos[w] < 0:
            continue
        if P.signs[i - 1] != eps.signs[i - 1]:
            bits |= 1 << int(pos[(t * w) % q])
    return Rho(q, bits)


def _check_phi(q: int) -> int:
    phi = totient(q)
    if phi > MAX_PHI:
        raise MemoryError(f"phi({q}) = {phi} exceeds {MAX_PHI}: bitset would need {2 ** phi // 8} bytes")
    return phi


def build_bad_set(
    d: int, q: int, eps: SignPattern, patterns: PatternSet, *, threads: int = 1, backend: str | None = None
) -> BadSet:
    if eps.k != q or patterns.k != q:
        raise ValueError(f"pattern length must equal q = {q}")
    phi = _check_phi(q)
    fill = {None: kernels.fill_bad_set, "numba": kernels.fill_bad_set_numba, "numpy": kernels.fill_bad_set_numpy}[backend]
    units = np.array(_units(q), dtype=np.int64)
    pos = _unit_positions(q)
    words = max(1, (1 << phi) >> 6)
    pats = patterns.patterns
    if threads <= 1 or units.size < 2:
        bits = np.zeros(words, dtype=np.uint64)
        fill(pats, eps.bits, q, units, pos, bits)
    else:
        # shard over t; each shard owns a bitset, merged by OR
        shards = [units[i::threads] for i in range(threads)]

        def run(us):
            b = np.zeros(words, dtype=np.uint64)
            fill(pats, eps.bits, q, us, pos, b)
            return b

        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run, shards))
        bits = parts[0]
        for b in parts[1:]:
            bits |= b
    out = BadSet(q, bits)
    log.debug("bad set q=%d: %d of %d twists excluded", q, out.bad_count, 1 << phi)
    return out


def find_good_rho(bad: BadSet) -> Rho | None:
    n = 1 << bad.phi
    words = bad.bits
    full = np.uint64(0xFFFFFFFFFFFFFFFF)
    cand = np.nonzero(words != full)[0]
    for w in cand.tolist():
        inv = ~int(words[w]) & ((1 << 64) - 1)
        idx = (w << 6) + ((inv & -inv).bit_length() - 1)
        if idx < n:
            return Rho(bad.q, idx)
        break
    return None


def verify_exclusion(d: int, q: int, eps: SignPattern, rho: Rho, patterns: PatternSet) -> bool:
    """True iff no pattern, unit ``t`` and residue ``n`` reproduce ``eps`` on the invertible positions."""
    return exclusion_witness(q, eps, rho, patterns) is None


def exclusion_witness(q: int, eps: SignPattern, rho: Rho, patterns: PatternSet):
    if rho.q != q or eps.k != q or patterns.k != q:
        raise ValueError("lengths and moduli must agree")
    if patterns.exact_count == 0:
        return None
    is_unit = np.array([gcd(w, q) == 1 for w in range(q)])
    units = np.nonzero(is_unit)[0]
    return kernels.find_exclusion_witness(
        patterns.sign_matrix(), np.array(eps.signs, dtype=np.int8), q, units, is_unit, rho.sign_table()
    )


# --- certificates ------------------------------------------------------------------


@dataclass(frozen=True)
class ExclusionCertificate:
    d: int
    q: int
    epsilon: SignPattern
    rho: Rho
    bad_count: int
    verified: bool
    pattern_set_digest: str

    def to_text(self) -> str:
        lines = [
            f"d={self.d}",
            f"q={self.q}",
            f"epsilon={self.epsilon}",
            f"rho={self.rho}",
            f"bad_count={self.bad_count}",
            f"verified={'true' if self.verified else 'false'}",
            f"pattern_set_digest={self.pattern_set_digest}",
        ]
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> str:
        text = self.to_text().encode("ascii")
        Path(path).write_bytes(text)
        return hashlib.sha256(text).hexdigest()

    @classmethod
    def from_text(cls, text: str) -> "ExclusionCertificate":
        kv = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            if "=" not in line:
                raise ValueError(f"malformed certificate line {line!r}")
            key, val = line.split("=", 1)
            kv[key.strip()] = val.strip()
        want = ("d", "q", "epsilon", "rho", "bad_count", "verified", "pattern_set_digest")
        missing = [k for k in want if k not in kv]
        if missing:
            raise ValueError(f"certificate is missing {missing}")
        if kv["verified"] not in ("true", "false"):
            raise ValueError("verified must be true or false")
        q = int(kv["q"])
        eps = SignPattern.from_string(kv["epsilon"])
        if eps.k != q:
            raise ValueError("epsilon length differs from q")
        return cls(
            d=int(kv["d"]),
            q=q,
            epsilon=eps,
            rho=Rho.from_string(q, kv["rho"]),
            bad_count=int(kv["bad_count"]),
            verified=kv["verified"] == "true",
            pattern_set_digest=kv["pattern_set_digest"],
        )

    @classmethod
    def load(cls, path: str | Path) -> "ExclusionCertificate":
        return cls.from_text(Path(path).read_text())


@dataclass
class SearchResult:
    bad: BadSet
    rho: Rho | None
    certificate: ExclusionCertificate | None


def search(d: int, q: int, eps: SignPattern, patterns: PatternSet, *, threads: int = 1) -> SearchResult:
    bad = build_bad_set(d, q, eps, patterns, threads=threads)
    rho = find_good_rho(bad)
    if rho is None:
        return SearchResult(bad, None, None)
    ok = verify_exclusion(d, q, eps, rho, patterns)
    cert = ExclusionCertificate(d, q, eps, rho, bad.bad_count, ok, patterns.digest())
    return SearchResult(bad, rho, cert)


@dataclass
class CertificateCheck:
    ok: bool
    reasons: list[str]


def check_certificate(cert: ExclusionCertificate, patterns: PatternSet, *, threads: int = 1) -> CertificateCheck:
    """Re-derive everything a certificate claims.

    The exclusion itself is checked with the direct verifier; the recorded
    ``bad_count`` and the choice of ``rho`` (first surviving twist) are
    recomputed from scratch, so a certificate edited by hand is rejected
    even when its ``rho`` happens to exclude the pattern too.
    """
    reasons = []
    if patterns.digest() != cert.pattern_set_digest:
        reasons.append("pattern set digest mismatch")
    if patterns.k != cert.q or patterns.d != cert.d:
        reasons.append(f"pattern set has d={patterns.d} k={patterns.k}, certificate has d={cert.d} q={cert.q}")
        return CertificateCheck(False, reasons)
    if not cert.verified:
        reasons.append("certificate is not marked verified")
    w = exclusion_witness(cert.q, cert.epsilon, cert.rho, patterns)
    if w is not None:
        p, t, n = w
        reasons.append(f"epsilon appears: pattern {SignPattern(int(patterns.patterns[p]), cert.q)} t={t} n={n}")
    bad = build_bad_set(cert.d, cert.q, cert.epsilon, patterns, threads=threads)
    if bad.bad_count != cert.bad_count:
        reasons.append(f"bad_count is {bad.bad_count}, certificate says {cert.bad_count}")
    first = find_good_rho(bad)
    if first is None or first.bits != cert.rho.bits:
        reasons.append(f"first surviving rho is {first}, certificate has {cert.rho}")
    return CertificateCheck(not reasons, reasons)


__all__ = [
    "BadSet",
    "CertificateCheck",
    "ExclusionCertificate",
    "MAX_PHI",
    "SearchResult",
    "build_bad_set",
    "check_certificate",
    "determined_rho",
    "exclusion_witness",
    "find_good_rho",
    "search",
    "verify_exclusion",
]
