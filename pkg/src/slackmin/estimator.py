"""Estimation of the agent's normalized mean rewards from observed choices.

The estimate is the minimizer of the total revealed-preference loss: for each
recorded step, the gap between the best achievable utility under the offered
incentives and the utility of the arm actually chosen.  A vector with zero
total loss rationalizes every observed choice.

Three routes to the minimum are provided:

- solve_exact_lp: global minimizer.  Small records go through the dense
  two-phase simplex on the full slack formulation; longer records use a
  cutting-plane scheme over the normalized box whose master problems are
  solved by the same simplex, stopping at a certified optimality gap.
- solve_subgradient: projected subgradient descent; scalable and warm
  startable, used between exact refreshes.
- brute_force_grid: exhaustive evaluation on a lattice, an independent
  oracle for tests (small n only).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import History
from .simplex import SimplexError, solve_lp

# Above this many constraint rows the full slack LP switches to cutting
# planes; the per-record slack variables make large direct tableaus
# quadratically expensive while the cutting master stays tiny.
DIRECT_ROW_LIMIT = 120
KELLEY_MAX_CUTS = 600
KELLEY_GAP_TOL = 1e-9
ZERO_POLISH_THRESHOLD = 1e-6
SELF_CHECK_TOL = 1e-9
GRID_MAX_POINTS = 500_000_000


@dataclass(frozen=True)
class NormalizedRewardEstimate:
    """An estimate of the normalized reward vector plus solver metadata."""

    s_hat: np.ndarray  # length n, first entry 0
    objective: float  # achieved total loss, >= 0
    solver: str  # one of "exact_lp", "subgradient", "grid"
    iterations: int
    converged: bool = True


def single_step_loss(s, chosen_arm: int, pi) -> float:
    """Gap between the best arm's utility and the chosen arm's under s.

    Zero exactly when the chosen arm maximizes s + pi.
    """
    s = np.asarray(s, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if s.shape != pi.shape or s.ndim != 1:
        raise ValueError("s and pi must be vectors of equal length")
    if not 1 <= chosen_arm <= s.size:
        raise ValueError(f"chosen_arm must lie in 1..{s.size}")
    v = s + pi
    return float(v.max() - v[chosen_arm - 1])


def total_loss(s, history: History) -> float:
    """Sum of single-step losses over all records."""
    if len(history) == 0:
        raise ValueError("history is empty")
    s = np.asarray(s, dtype=float)
    v = history.pi_matrix + s
    return float(v.max(axis=1).sum() - v[np.arange(len(history)), history.chosen_idx].sum())


def _loss_and_subgrad(s: np.ndarray, pi: np.ndarray, chosen_idx: np.ndarray):
    m, n = pi.shape
    v = pi + s
    best = v.argmax(axis=1)  # lowest index on ties
    rows = np.arange(m)
    f = float(v[rows, best].sum() - v[rows, chosen_idx].sum())
    g = np.bincount(best, minlength=n).astype(float)
    g -= np.bincount(chosen_idx, minlength=n)
    return f, g


def _polish_zero(s: np.ndarray, pi: np.ndarray, chosen_idx: np.ndarray,
                 lo: float, hi: float, f: float) -> tuple[np.ndarray, float]:
    # A solution with tiny residual loss usually sits within rounding
    # distance of the zero-loss region, which has nonempty interior for
    # generic incentive draws.  Nudge violated pairs until the loss is an
    # exact floating-point zero; keep the best point seen.
    best_s, best_f = s.copy(), f
    best_resid = np.inf
    m = pi.shape[0]
    rows = np.arange(m)
    factor = 2.0
    for _ in range(30):
        v = pi + s
        best = v.argmax(axis=1)
        viol = v[rows, best] - v[rows, chosen_idx]
        mask = viol > 0
        if not mask.any():
            return s, 0.0
        # Progress must be measured per row: satisfied rows contribute exact
        # zeros here, while a difference of full sums is quantized at the
        # magnitude of the sums and cannot resolve residuals this small.
        resid = float(viol[mask].sum())
        if resid < best_resid:
            best_resid = resid
            best_s, best_f = s.copy(), resid
        else:
            factor *= 0.5
        # A violation below one ulp of pi + s cannot be repaired by a move
        # proportional to it (the addition re-rounds it away), so every move
        # carries a fixed margin that lands strictly inside the region.
        step = factor * viol[mask] + 1e-12
        delta = np.zeros_like(s)
        np.add.at(delta, chosen_idx[mask], step)
        np.add.at(delta, best[mask], -step)
        s = s + delta
        s[0] = 0.0
        np.clip(s[1:], lo, hi, out=s[1:])
    return best_s, best_f


def solve_exact_lp(history: History, bounds: tuple[float, float],
                   method: str = "auto") -> NormalizedRewardEstimate:
    """Global minimizer of total_loss over {s : s_1 = 0, s in the box}.

    method: "auto" picks the direct simplex for short records and the
    cutting-plane path otherwise; "simplex" and "cutting" force a path.
    """
    m = len(history)
    if m == 0:
        raise ValueError("history is empty")
    lo, hi = float(bounds[0]), float(bounds[1])
    if not lo <= 0.0 <= hi:
        raise ValueError("normalized box must contain 0")
    n = history.n
    pi = history.pi_matrix
    chosen = history.chosen_idx

    if method == "auto":
        direct = m * (n - 1) + (n - 1) <= DIRECT_ROW_LIMIT
    elif method in ("simplex", "cutting"):
        direct = method == "simplex"
    else:
        raise ValueError(f"unknown method {method!r}")

    if direct:
        s, claimed, iters = _solve_direct(pi, chosen, lo, hi)
        label = "simplex"
    else:
        s, claimed, iters = _solve_kelley(pi, chosen, lo, hi)
        label = "cutting"

    f = total_loss(s, history)
    if 0.0 < f <= ZERO_POLISH_THRESHOLD:
        s, f = _polish_zero(s, pi, chosen, lo, hi, f)
    if abs(claimed - f) > SELF_CHECK_TOL * (1.0 + abs(f)) + ZERO_POLISH_THRESHOLD:
        raise SimplexError(
            f"solver objective {claimed!r} disagrees with recomputed loss {f!r}",
            iters,
        )
    return NormalizedRewardEstimate(s_hat=s, objective=f, solver=label,
                                    iterations=iters)


def _solve_direct(pi: np.ndarray, chosen: np.ndarray, lo: float, hi: float):
    # Variables: d_a = s_a - lo >= 0 for a = 2..n, then one slack y_tau >= 0
    # per record.  y >= 0 is a valid tightening: at any minimizer each slack
    # equals the max-gap, which is nonnegative.
    m, n = pi.shape
    nf = n - 1
    width = hi - lo
    rows = []
    rhs = []
    for tau in range(m):
        u = int(chosen[tau])
        base = pi[tau] - pi[tau, u]
        for a in range(n):
            if a == u:
                continue
            # y_tau + s_u - s_a >= pi_a - pi_u, rewritten over d and flipped
            # to <= form.
            row = np.zeros(nf + m)
            row[nf + tau] = -1.0
            g = base[a]
            if u > 0:
                row[u - 1] = -1.0
            else:
                g += lo
            if a > 0:
                row[a - 1] = 1.0
            else:
                g -= lo
            rows.append(row)
            rhs.append(-g)
    for a in range(nf):  # d_a <= width
        row = np.zeros(nf + m)
        row[a] = 1.0
        rows.append(row)
        rhs.append(width)
    c = np.zeros(nf + m)
    c[nf:] = 1.0
    x, obj, iters = solve_lp(c, np.array(rows), np.array(rhs))
    s = np.zeros(n)
    s[1:] = lo + x[:nf]
    return s, obj, iters


def _solve_kelley(pi: np.ndarray, chosen: np.ndarray, lo: float, hi: float):
    # Minimize the piecewise-linear loss over the box by building its lower
    # envelope from subgradient cuts; the master problems are tiny LPs in
    # (d, z) with z >= 0 valid because the loss is nonnegative.
    m, n = pi.shape
    nf = n - 1
    width = hi - lo

    def eval_at(d: np.ndarray):
        s = np.zeros(n)
        s[1:] = lo + d
        f, g = _loss_and_subgrad(s, pi, chosen)
        return s, f, g[1:]

    d = np.full(nf, -lo)  # start at s = 0
    s, f, g = eval_at(d)
    best_s, best_f = s, f
    cuts_g = [g]
    cuts_b = [float(g @ d - f)]
    box = np.eye(nf, nf + 1) * 1.0
    box_rhs = np.full(nf, width)
    c = np.zeros(nf + 1)
    c[-1] = 1.0
    iters = 1
    while iters < KELLEY_MAX_CUTS:
        if best_f == 0.0:
            return best_s, 0.0, iters
        A = np.zeros((len(cuts_g) + nf, nf + 1))
        A[: len(cuts_g), :nf] = cuts_g
        A[: len(cuts_g), nf] = -1.0
        A[len(cuts_g) :] = box
        rhs = np.concatenate([cuts_b, box_rhs])
        x, z_lb, _ = solve_lp(c, A, rhs)
        gap = best_f - z_lb
        if gap <= KELLEY_GAP_TOL * (1.0 + abs(best_f)):
            return best_s, best_f, iters
        d = x[:nf]
        s, f, g = eval_at(d)
        if f < best_f:
            best_s, best_f = s, f
        cuts_g.append(g)
        cuts_b.append(float(g @ d - f))
        iters += 1
    raise SimplexError("cutting-plane iteration limit exceeded", iters)


def solve_subgradient(history: History, bounds: tuple[float, float],
                      max_iters: int = 200, step_schedule: str = "polyak",
                      tol: float = 1e-6, x0: np.ndarray | None = None,
                      f_target: float | None = None) -> NormalizedRewardEstimate:
    """Projected subgradient descent on the total loss, first entry pinned.

    step_schedule "polyak" uses (f - target)/|g|^2 steps against f_target
    (0 if not given, the loss floor); "diminishing" uses width/(sqrt(i)|g|).
    Returns the best iterate; converged=False if neither the target nor a
    zero subgradient was reached within max_iters.
    """
    m = len(history)
    if m == 0:
        raise ValueError("history is empty")
    if step_schedule not in ("polyak", "diminishing"):
        raise ValueError(f"unknown step schedule {step_schedule!r}")
    lo, hi = float(bounds[0]), float(bounds[1])
    n = history.n
    pi = history.pi_matrix
    chosen = history.chosen_idx
    width = hi - lo

    if x0 is None:
        s = np.zeros(n)
    else:
        s = np.asarray(x0, dtype=float).copy()
        s[0] = 0.0
        np.clip(s[1:], lo, hi, out=s[1:])
    target = 0.0 if f_target is None else max(0.0, float(f_target))

    best_s, best_f = s.copy(), np.inf
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        f, g = _loss_and_subgrad(s, pi, chosen)
        if f < best_f:
            best_s, best_f = s.copy(), f
        gnorm2 = float(g[1:] @ g[1:])
        if gnorm2 == 0.0:
            converged = True  # exact global minimum of the convex loss
            break
        if best_f <= target + tol * (1.0 + target):
            converged = True
            break
        if step_schedule == "polyak":
            step = (f - target) / gnorm2
        else:
            step = width / (np.sqrt(it) * np.sqrt(gnorm2))
        s[1:] -= step * g[1:]
        np.clip(s[1:], lo, hi, out=s[1:])
    return NormalizedRewardEstimate(s_hat=best_s, objective=best_f,
                                    solver="subgradient", iterations=it,
                                    converged=converged)


def brute_force_grid(history: History, bounds: tuple[float, float],
                     resolution: float) -> NormalizedRewardEstimate:
    """Exhaustive loss evaluation on a lattice over the normalized box.

    Independent oracle for acceptance tests; refuses n > 4 (the lattice is
    exponential in n).
    """
    m = len(history)
    if m == 0:
        raise ValueError("history is empty")
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    n = history.n
    if n > 4:
        raise ValueError("grid oracle restricted to n <= 4")
    lo, hi = float(bounds[0]), float(bounds[1])
    count = int(round((hi - lo) / resolution)) + 1
    if count < 2:
        raise ValueError("box narrower than one grid step")
    nf = n - 1
    if count**nf > GRID_MAX_POINTS:
        raise ValueError("grid too large; coarsen the resolution")
    axis = np.linspace(lo, hi, count)

    pi = history.pi_matrix
    chosen = history.chosen_idx
    # Loss = sum_tau max_a(s_a + pi_a)  -  sum_a visits_a * s_a  -  const.
    # The max terms are accumulated by broadcasting one record at a time;
    # the linear part needs only per-arm visit counts.
    shape = (count,) * nf
    acc = np.zeros(shape)
    for tau in range(m):
        term = np.full(shape, pi[tau, 0])  # s_1 = 0
        for a in range(1, n):
            vec = axis + pi[tau, a]
            # ndim nf-(a-1): trailing-dim broadcast lands count on axis a-1
            view = vec.reshape((count,) + (1,) * (nf - 1 - (a - 1)))
            np.maximum(term, view, out=term)
        acc += term
    visits = np.bincount(chosen, minlength=n).astype(float)
    for a in range(1, n):
        vec = visits[a] * axis
        acc -= vec.reshape((count,) + (1,) * (nf - 1 - (a - 1)))
    rows = np.arange(m)
    acc -= pi[rows, chosen].sum()

    flat = int(acc.argmin())
    idx = np.unravel_index(flat, shape)
    s = np.zeros(n)
    s[1:] = axis[list(idx)]
    return NormalizedRewardEstimate(s_hat=s, objective=float(acc.flat[flat]),
                                    solver="grid", iterations=int(acc.size))
