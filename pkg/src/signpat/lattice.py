"""Integer lattices: Hermite normal form and coset representatives.

For a support set ``S`` of ``d + 1`` integers, the value map
``u -> (f(s))_{s in S}`` sends binomial coordinates to values on ``S`` through
the integer matrix ``B_S[s, j] = C(s, j)``. Polynomials taking integer values
on ``S`` modulo the even-integer-valued lattice correspond to
``Z^{d+1} / L_S`` where ``L_S`` is spanned by the columns of ``2 B_S``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .poly import comb_signed, superfactorial, vandermonde


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a - (a // b) * b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def hermite_normal_form(cols: Sequence[Sequence[int]]) -> list[list[int]]:
    """Lower-triangular column HNF of a full-rank square integer matrix.

    ``cols`` is given as a list of columns. Returns columns ``W[0..n-1]`` with
    ``W[j][i] = 0`` for ``i < j``, positive diagonal, and ``0 <= W[j][i] < W[i][i]``
    for ``j < i`` (entries left of each pivot reduced). Same lattice as input.
    """
    n = len(cols)
    W = [list(map(int, c)) for c in cols]
    if any(len(c) != n for c in W):
        raise ValueError("expected a square matrix")
    for i in range(n):
        # clear row i in columns i+1.. using extended gcd column operations
        for j in range(i + 1, n):
            a, b = W[i][i], W[j][i]
            if b == 0:
                continue
            g, x, y = _xgcd(a, b)
            p, q = a // g, b // g
            ci, cj = W[i], W[j]
            W[i] = [x * s + y * t for s, t in zip(ci, cj)]
            W[j] = [-q * s + p * t for s, t in zip(ci, cj)]
        if W[i][i] == 0:
            raise ValueError("matrix is singular")
        if W[i][i] < 0:
            W[i] = [-e for e in W[i]]
    for i in range(n):
        for j in range(i):
            f = W[j][i] // W[i][i]
            if f:
                W[j] = [s - f * t for s, t in zip(W[j], W[i])]
    return W


def value_matrix(S: Sequence[int], d: int) -> list[list[int]]:
    """Rows indexed by ``s in S``, columns by ``j``: ``C(s, j)``."""
    return [[comb_signed(s, j) for j in range(d + 1)] for s in S]


def det_int(M: Sequence[Sequence[int]]) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    A = [list(map(int, r)) for r in M]
    n = len(A)
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for r in range(k + 1, n):
                if A[r][k]:
                    A[k], A[r] = A[r], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1] if n else 1


def adjugate(M: Sequence[Sequence[int]]) -> list[list[int]]:
    n = len(M)
    if n == 1:
        return [[1]]
    adj = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(M) if k != i]
            adj[j][i] = (-1) ** (i + j) * det_int(minor)
    return adj


def expected_coset_count(S: Sequence[int], d: int) -> int:
    num = 2 ** (d + 1) * vandermonde(S)
    den = superfactorial(d)
    if num % den:
        raise ArithmeticError("coset count is not integral")
    return num // den


def coset_basis(S: Sequence[int], d: int) -> list[list[int]]:
    """HNF columns of ``L_S``; the diagonal gives the representative box."""
    if len(S) != d + 1:
        raise ValueError(f"support set must have exactly d+1 = {d + 1} elements")
    if len(set(S)) != len(S):
        raise ValueError("support set elements must be distinct")
    B = value_matrix(sorted(S), d)
    cols = [[2 * B[i][j] for i in range(d + 1)] for j in range(d + 1)]
    return hermite_normal_form(cols)


def coset_representatives(S: Sequence[int], d: int) -> np.ndarray:
    """All representatives of ``Z^{d+1} / L_S`` as rows of an int64 array.

    Row ``i`` lists integer values at the sorted elements of ``S``.
    """
    W = coset_basis(S, d)
    diag = [W[i][i] for i in range(d + 1)]
    count = 1
    for h in diag:
        count *= h
    if count != expected_coset_count(S, d):
        raise ArithmeticError(f"HNF index {count} disagrees with the closed form for S={list(S)}")
    grids = np.meshgrid(*[np.arange(h, dtype=np.int64) for h in diag], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def reduce_mod_lattice(v: Sequence[int], W: Sequence[Sequence[int]]) -> list[int]:
    """Canonical representative of ``v`` in the HNF box of ``W``."""
    v = list(map(int, v))
    for i in range(len(W)):
        f = v[i] // W[i][i]
        if f:
            v = [a - f * b for a, b in zip(v, W[i])]
    return v


def vertex_transform(S: Sequence[int], d: int) -> tuple[np.ndarray, int]:
    """``(A, D)`` with ``A @ values = D * u`` for integer ``D = |det B_S|``.

    ``u`` are the binomial coordinates of the polynomial interpolating
    ``values`` on sorted ``S``.
    """
    B = value_matrix(sorted(S), d)
    det = det_int(B)
    adj = adjugate(B)
    if det < 0:
        det = -det
        adj = [[-e for e in row] for row in adj]
    return np.array(adj, dtype=np.int64), det


def lattice_contains(W: Sequence[Sequence[int]], v: Sequence[int]) -> bool:
    return all(x == 0 for x in reduce_mod_lattice(v, W))


__all__ = [
    "adjugate",
    "coset_basis",
    "coset_representatives",
    "det_int",
    "expected_coset_count",
    "hermite_normal_form",
    "lattice_contains",
    "reduce_mod_lattice",
    "value_matrix",
    "vertex_transform",
]
