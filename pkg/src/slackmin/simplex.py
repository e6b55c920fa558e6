"""Dense two-phase simplex for the small linear programs used in estimation.

Solves   min c.x   s.t.   A x <= b,  x >= 0

with a full tableau, Dantzig pricing, and a permanent switch to Bland's rule
if the objective stalls (anti-cycling).  Not a general-purpose LP code: no
sparsity, no presolve, no revised factorizations.  Problem sizes here are a
few thousand rows at most.
"""

from __future__ import annotations

import numpy as np

EPS_COST = 1e-9  # reduced-cost threshold for entering columns
EPS_PIVOT = 1e-10  # smallest pivot element magnitude accepted
EPS_FEAS = 1e-7  # phase-1 objective above this means infeasible
STALL_LIMIT = 60  # degenerate pivots tolerated before Bland's rule


class SimplexError(RuntimeError):
    """Solver failure; carries the pivot count reached."""

    def __init__(self, message: str, iterations: int):
        super().__init__(message)
        self.iterations = iterations


def solve_lp(c, A, b, max_iters: int | None = None) -> tuple[np.ndarray, float, int]:
    """Return (x, objective, pivots) for min c.x s.t. A x <= b, x >= 0.

    Raises SimplexError on iteration exhaustion, detected infeasibility, or
    an unbounded objective.
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    m, nv = A.shape
    if c.shape != (nv,) or b.shape != (m,):
        raise ValueError("inconsistent LP dimensions")
    if max_iters is None:
        max_iters = 50 * (m + nv) + 2000

    # Row scaling keeps the tableau well conditioned; it changes neither the
    # feasible set nor the optimal x.
    A = A.copy()
    scale = np.maximum(np.abs(A).max(axis=1), 1e-12)
    A /= scale[:, None]
    b /= scale

    # Rows with negative rhs are negated so every rhs is >= 0; those rows
    # lose their slack as a starting basis column and get an artificial.
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    slack_sign = np.where(neg, -1.0, 1.0)
    art_rows = np.flatnonzero(neg)
    na = art_rows.size

    ncols = nv + m + na
    T = np.zeros((m, ncols + 1))
    T[:, :nv] = A
    T[np.arange(m), nv + np.arange(m)] = slack_sign
    for j, r in enumerate(art_rows):
        T[r, nv + m + j] = 1.0
    T[:, -1] = b

    basis = nv + np.arange(m)
    for j, r in enumerate(art_rows):
        basis[r] = nv + m + j

    pivots = 0

    def pivot_loop(cost: np.ndarray, allowed: int) -> None:
        # cost[-1] carries minus the current objective and rises as the
        # objective falls; `allowed` bounds the entering-column range.
        nonlocal pivots, T
        bland = False
        stall = 0
        best = cost[-1]
        while True:
            red = cost[:allowed]
            if bland:
                cand = np.flatnonzero(red < -EPS_COST)
                if cand.size == 0:
                    return
                j = int(cand[0])
            else:
                j = int(np.argmin(red))
                if red[j] >= -EPS_COST:
                    return
            col = T[:, j]
            pos = col > EPS_PIVOT
            if not pos.any():
                raise SimplexError("unbounded linear program", pivots)
            ratios = np.full(T.shape[0], np.inf)
            ratios[pos] = T[pos, -1] / col[pos]
            rmin = ratios.min()
            ties = np.flatnonzero(ratios <= rmin + 1e-12)
            # lowest basis-variable index among ties keeps Bland's rule valid
            r = int(ties[np.argmin(basis[ties])])
            T[r] /= T[r, j]
            colv = T[:, j].copy()
            colv[r] = 0.0
            T -= np.outer(colv, T[r])
            cost -= cost[j] * T[r]
            basis[r] = j
            pivots += 1
            if pivots > max_iters:
                raise SimplexError("pivot limit exceeded", pivots)
            if not bland:
                if cost[-1] > best + 1e-12:
                    best = cost[-1]
                    stall = 0
                else:
                    stall += 1
                    if stall > STALL_LIMIT:
                        bland = True

    if na > 0:
        cost1 = np.zeros(ncols + 1)
        cost1[nv + m : nv + m + na] = 1.0
        for r in range(m):
            if basis[r] >= nv + m:
                cost1 -= T[r]
        pivot_loop(cost1, allowed=nv + m)  # artificials may not re-enter
        if -cost1[-1] > EPS_FEAS:
            raise SimplexError("infeasible linear program", pivots)
        # Drive leftover zero-level artificials out; drop redundant rows.
        drop: list[int] = []
        for r in range(T.shape[0]):
            if basis[r] >= nv + m:
                cand = np.flatnonzero(np.abs(T[r, : nv + m]) > EPS_PIVOT)
                if cand.size == 0:
                    drop.append(r)
                    continue
                j = int(cand[0])
                T[r] /= T[r, j]
                colv = T[:, j].copy()
                colv[r] = 0.0
                T -= np.outer(colv, T[r])
                basis[r] = j
        if drop:
            keep = np.setdiff1d(np.arange(T.shape[0]), drop)
            T = T[keep]
            basis = basis[keep]

    # Phase 2 on the original objective; artificial columns are retired.
    T = np.hstack([T[:, : nv + m], T[:, -1:]])
    cost2 = np.zeros(nv + m + 1)
    cost2[:nv] = c
    for r in range(T.shape[0]):
        if cost2[basis[r]] != 0.0:
            cost2 -= cost2[basis[r]] * T[r]
    pivot_loop(cost2, allowed=nv + m)

    x = np.zeros(nv + m)
    x[basis] = T[:, -1]
    x = x[:nv]
    np.clip(x, 0.0, None, out=x)
    return x, float(-cost2[-1]), pivots
