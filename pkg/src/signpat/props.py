"""Completeness and counting checks against enumerated pattern sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .bounds import back1_lower_bound
from .patterns import DEFAULT_BUDGET, PatternSet, SignPattern, enumerate_patterns


@dataclass
class PropRow:
    m: int
    count: int
    required: Fraction | int
    passed: bool
    witness: str = ""


@dataclass
class PropReport:
    check: str
    d: int
    r: int
    rows: list[PropRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def record(self) -> dict:
        rec = {"check": self.check, "d": self.d, "r": self.r}
        for row in self.rows:
            rec[f"m{row.m}_count"] = row.count
            rec[f"m{row.m}_required"] = row.required
            rec[f"m{row.m}_pass"] = row.passed
            if row.witness:
                rec[f"m{row.m}_witness"] = row.witness
        rec["pass"] = self.passed
        return rec


def missing_pattern(patterns: PatternSet) -> SignPattern | None:
    """Smallest pattern (by bit value) absent from the set, if any."""
    full = 1 << patterns.k
    if patterns.exact_count == full:
        return None
    arr = patterns.patterns
    gaps = np.nonzero(arr != np.arange(arr.size, dtype=np.int64))[0]
    first = int(gaps[0]) if gaps.size else arr.size
    return SignPattern(first, patterns.k)


def check_back2(patterns: PatternSet, r: int) -> PropReport:
    """Every sign pattern of length ``2r + 2`` must occur."""
    k = 2 * r + 2
    if patterns.k != k:
        raise ValueError(f"expected patterns of length {k}, got {patterns.k}")
    miss = missing_pattern(patterns)
    row = PropRow(k, patterns.exact_count, 2**k, miss is None, "" if miss is None else f"missing {miss}")
    return PropReport("back2", patterns.d, r, [row])


def check_back1(d: int, r: int, m_range: Iterable[int], *, budget: int = DEFAULT_BUDGET) -> PropReport:
    """At least ``2 m^r / (2r-1)!!`` patterns of each length ``m``."""
    if r < 1:
        raise ValueError("r must be at least 1")
    rep = PropReport("back1", d, r)
    for m in m_range:
        count = enumerate_patterns(d, m, budget=budget).exact_count
        need = back1_lower_bound(m, r)
        ok = count >= need
        rep.rows.append(PropRow(m, count, need, ok, "" if ok else f"deficit {need - count}"))
    return rep


__all__ = ["PropReport", "PropRow", "check_back1", "check_back2", "missing_pattern"]
