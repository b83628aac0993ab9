"""Dense linear algebra over GF(2) on uint8 0/1 arrays."""
from __future__ import annotations

import numpy as np


class InconsistentSystem(ValueError):
    """Raised when A x = y has no solution; ``rows`` lists offending equations."""

    def __init__(self, rows):
        self.rows = list(int(r) for r in rows)
        super().__init__(f"unsatisfiable equations at rows {self.rows[:20]}{'...' if len(self.rows) > 20 else ''}")


def _as_bits(a) -> np.ndarray:
    a = np.asarray(a)
    if a.size and not np.all((a == 0) | (a == 1)):
        raise ValueError("GF(2) arrays must contain only 0/1")
    return a.astype(np.uint8)


def row_reduce(A, y=None):
    """Reduced row echelon form of A (and the matching right-hand side).

    Returns (R, rhs, pivots, combos) where ``combos[i]`` records which original
    rows were summed into reduced row i, used to report inconsistent targets.
    """
    R = _as_bits(A).copy()
    m, n = R.shape
    rhs = np.zeros(m, dtype=np.uint8) if y is None else _as_bits(y).copy()
    combos = np.eye(m, dtype=np.uint8)
    pivots = []
    r = 0
    for c in range(n):
        if r == m:
            break
        hits = np.flatnonzero(R[r:, c]) + r
        if hits.size == 0:
            continue
        p = hits[0]
        if p != r:
            R[[r, p]] = R[[p, r]]
            rhs[[r, p]] = rhs[[p, r]]
            combos[[r, p]] = combos[[p, r]]
        others = np.flatnonzero(R[:, c])
        others = others[others != r]
        R[others] ^= R[r]
        rhs[others] ^= rhs[r]
        combos[others] ^= combos[r]
        pivots.append(c)
        r += 1
    return R, rhs, pivots, combos


def rank(A) -> int:
    return len(row_reduce(A)[2])


def solve(A, y) -> np.ndarray:
    """One solution of A x = y with every free variable set to zero."""
    R, rhs, pivots, combos = row_reduce(A, y)
    k = len(pivots)
    bad = np.flatnonzero(rhs[k:])
    if bad.size:
        rows = np.flatnonzero(combos[k + bad].any(axis=0))
        raise InconsistentSystem(rows)
    x = np.zeros(R.shape[1], dtype=np.uint8)
    x[pivots] = rhs[:k]
    return x


def matvec(A, x) -> np.ndarray:
    return (_as_bits(A).astype(np.int64) @ _as_bits(x).astype(np.int64) % 2).astype(np.uint8)
