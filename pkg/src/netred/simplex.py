"""Dense revised simplex for small covering LPs.

Solves ``min c^T x  s.t.  A x >= b,  x >= 0`` with ``c >= 0`` by running the
primal simplex method on the dual ``max b^T y  s.t.  A^T y <= c,  y >= 0``,
whose slack basis is feasible at ``y = 0``. The primal solution is read off
as the simplex multipliers. Appending a row to ``A`` appends a column to the
dual, so the previous optimal basis stays feasible and re-solves warm-start.

Bland's rule is used for both pivot choices, so the method cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-11


@dataclass
class LPResult:
    status: str  # "optimal" or "infeasible"
    x: np.ndarray | None
    value: float
    iterations: int


class CoveringLP:
    """Incrementally grown LP ``min c^T x, A x >= b, x >= 0``.

    Rows are stored normalized to unit Euclidean norm.

    >>> lp = CoveringLP([1.0, 1.0])
    >>> lp.add_row([1.0, 2.0], 2.0)
    >>> lp.add_row([3.0, 1.0], 3.0)
    >>> r = lp.solve()
    >>> r.status, np.round(r.x, 6).tolist()
    ('optimal', [0.8, 0.6])
    """

    def __init__(self, c, max_iter: int = 100_000):
        c = np.asarray(c, dtype=float)
        if np.any(c < 0):
            raise ValueError("covering LP requires c >= 0")
        self.c = c
        self.k = c.size
        self.rows: list[np.ndarray] = []
        self.rhs: list[float] = []
        # dual column i is stored as i, slack k as -(k + 1), so that appending
        # rows does not invalidate the stored basis
        self.basis = [-(i + 1) for i in range(self.k)]
        self.max_iter = max_iter

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def add_row(self, a, b: float) -> None:
        a = np.asarray(a, dtype=float)
        norm = np.linalg.norm(a)
        if norm == 0.0:
            if b > 0:
                # 0 >= b is never satisfiable; keep as an all-zero column
                self.rows.append(np.zeros(self.k))
                self.rhs.append(1.0)
            return
        self.rows.append(a / norm)
        self.rhs.append(float(b) / norm)

    def _columns(self):
        m = self.n_rows
        cols = np.zeros((self.k, m + self.k))
        if m:
            cols[:, :m] = np.array(self.rows).T
        cols[:, m:] = np.eye(self.k)
        obj = np.concatenate([np.array(self.rhs), np.zeros(self.k)])
        return cols, obj

    def solve(self) -> LPResult:
        m = self.n_rows
        cols, obj = self._columns()
        basis = [self._decode(v, m) for v in self.basis]
        iters = 0
        while True:
            bmat = cols[:, basis]
            xb = np.linalg.solve(bmat, self.c)
            xb = np.maximum(xb, 0.0)
            prices = np.linalg.solve(bmat.T, obj[basis])
            reduced = obj - prices @ cols
            reduced[basis] = 0.0
            cand = np.flatnonzero(reduced > PIVOT_TOL * max(1.0, np.abs(obj).max()))
            if cand.size == 0:
                self.basis = [self._encode(v, m) for v in basis]
                x = np.maximum(prices, 0.0)
                return LPResult("optimal", x, float(self.c @ x), iters)
            enter = int(cand[0])
            direction = np.linalg.solve(bmat, cols[:, enter])
            pos = np.flatnonzero(direction > PIVOT_TOL)
            if pos.size == 0:
                self.basis = [self._encode(v, m) for v in basis]
                return LPResult("infeasible", None, np.inf, iters)
            ratios = xb[pos] / direction[pos]
            best = ratios.min()
            ties = pos[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
            leave = min(ties, key=lambda r: basis[r])
            basis[leave] = enter
            iters += 1
            if iters > self.max_iter:
                raise RuntimeError("simplex iteration limit reached")

    @staticmethod
    def _decode(v: int, m: int) -> int:
        return m + (-v - 1) if v < 0 else v

    @staticmethod
    def _encode(v: int, m: int) -> int:
        return -(v - m + 1) if v >= m else v


def solve_covering_lp(c, a, b) -> LPResult:
    """One-shot ``min c^T x, a x >= b, x >= 0``."""
    lp = CoveringLP(c)
    for row, rhs in zip(np.atleast_2d(a), np.atleast_1d(b)):
        lp.add_row(row, rhs)
    return lp.solve()
