"""Closed-form theoretical quantities: tail bounds, the concentration and
regret bounds, and the distribution of incentive differences.

Everything here is a deterministic pure function of its arguments.  The
constant alpha has no closed form; it enters as a user parameter (default 1
at call sites) and results that depend on it hold up to that constant.
Logarithms are natural throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .game import GameConfig


@lru_cache(maxsize=None)
def compute_k_tilde(k: float) -> int:
    """Smallest integer m >= 2 with k*sqrt(log 2m) < sqrt(m).

    Such m always exists because sqrt(m)/sqrt(log 2m) is unbounded.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    m = 2
    while k * math.sqrt(math.log(2 * m)) >= math.sqrt(m):
        m += 1
    return m


def pt_bound(k: float, t: int) -> float:
    """Agent suboptimal-choice tail bound k*sqrt(log 2t)/sqrt(t).

    Only meaningful once t reaches the crossover point; below it the
    expression exceeds 1 and bounds nothing.
    """
    kt = compute_k_tilde(k)
    if t < kt:
        raise ValueError(f"t={t} below the bound's domain start {kt}")
    return k * math.sqrt(math.log(2 * t)) / math.sqrt(t)


def theoretical_B(k: float, k_tilde: int, r_min: float, r_max: float,
                  gamma: float, n: int) -> float:
    """Buffer scale 3k(3(r_max-r_min)+gamma)^n (32n)^(1/6) / (1 - k sqrt(log 2k~)/sqrt(k~)).

    Astronomically large for realistic parameter ranges; see the buffer
    override on the incentive side.
    """
    denom = 1.0 - k * math.sqrt(math.log(2 * k_tilde)) / math.sqrt(k_tilde)
    if denom <= 0:
        raise ValueError("k_tilde does not satisfy the defining inequality for k")
    dr = r_max - r_min
    return 3.0 * k * (3.0 * dr + gamma) ** n * (32.0 * n) ** (1.0 / 6.0) / denom


@dataclass(frozen=True)
class BoundParams:
    """Parameter bundle shared by the bound calculators."""

    k: float
    k_tilde: int
    alpha: float
    beta: float
    n: int
    r_min: float
    r_max: float
    gamma: float
    w: float
    m_pr: float
    theta_max: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not self.r_max > self.r_min:
            raise ValueError("r_max must exceed r_min")
        if not 0 < self.gamma <= self.r_max - self.r_min - 1:
            raise ValueError("gamma must lie in (0, r_max - r_min - 1]")
        if not 0 < self.w < 0.25:
            raise ValueError("w must lie in (0, 1/4)")
        for name in ("alpha", "beta", "m_pr", "theta_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.k_tilde < 2:
            raise ValueError("k_tilde must be at least 2")
        if self.k * math.sqrt(math.log(2 * self.k_tilde)) >= math.sqrt(self.k_tilde):
            raise ValueError("k_tilde does not satisfy the defining inequality for k")

    @classmethod
    def from_config(cls, config: GameConfig, alpha: float = 1.0,
                    beta: float = 1.0) -> "BoundParams":
        return cls(k=config.k, k_tilde=compute_k_tilde(config.k), alpha=alpha,
                   beta=beta, n=config.n, r_min=config.r_min,
                   r_max=config.r_max, gamma=config.gamma, w=config.w,
                   m_pr=config.m_pr, theta_max=config.theta_max)


def expected_eta(params: BoundParams, t: int, n: int | None = None) -> float:
    """Expected count of uniform-exploration steps over [k_tilde, t-1].

    Steps up to n are deterministic initialization, so the sum of
    exploration probabilities starts at max(k_tilde, n+1).
    """
    n_arms = params.n if n is None else n
    start = max(params.k_tilde, n_arms + 1)
    if t - 1 < start:
        return 0.0
    taus = np.arange(start, t, dtype=float)
    eps = np.minimum(1.0, params.m_pr / taus ** (0.5 - params.w))
    return float(eps.sum())


def lambda_t(params: BoundParams, expected_eta_value: float, t: int,
             beta: float | None = None) -> float:
    """Concentration margin at step t; negative values mean the bound is vacuous there.

    beta overrides params.beta when the caller sweeps a schedule.
    """
    if expected_eta_value < 0:
        raise ValueError("expected_eta_value must be nonnegative")
    b = params.beta if beta is None else beta
    dr = params.r_max - params.r_min
    ratio = params.k * math.sqrt(math.log(2 * params.k_tilde)) / math.sqrt(params.k_tilde)
    gain = (4.0 * params.alpha * (1.0 - ratio) ** 2 / 27.0) * b**3 * expected_eta_value
    return gain - 3.0 * params.k * (3.0 * dr + params.gamma) * math.sqrt(t * math.log(2 * t))


def empirical_eta(trace, k_tilde: int, t: int) -> int:
    """Count of realized exploration steps in [k_tilde, t-1].

    Accepts anything exposing explored_pr flags (one per step, starting at
    step 1) or such a flag array directly.
    """
    flags = getattr(trace, "explored_pr", trace)
    flags = np.asarray(flags)
    if flags.ndim != 1:
        raise ValueError("explore flags must be one-dimensional")
    if len(flags) < t - 1:
        raise ValueError(f"trace covers {len(flags)} steps, need {t - 1}")
    if t - 1 < k_tilde:
        return 0
    return int(flags[k_tilde - 1 : t - 1].sum())


def concentration_bound(params: BoundParams, lambda_value: float, beta: float,
                        t: int) -> tuple[float, float]:
    """Tail bound on the sup-norm estimation error exceeding beta.

    Returns (raw, clamped): the raw exponential can exceed 1 by many orders
    of magnitude when the margin is weak; the clamp restricts it to [0, 1]
    for use as a probability.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if t < params.k_tilde:
        raise ValueError(f"t={t} below the bound's domain start {params.k_tilde}")
    dr = params.r_max - params.r_min
    exponent = (-2.0 * lambda_value**2 / ((t - 1) * 16.0 * params.n * (6.0 * dr + 2.0 * params.gamma) ** 2)
                - math.log(beta) + params.n * math.log(2.0 * dr))
    try:
        raw = 2.0 * math.exp(exponent)
    except OverflowError:
        raw = math.inf
    return raw, min(1.0, max(0.0, raw))


@dataclass(frozen=True)
class RegretBound:
    """Cumulative regret bound split into its six displayed terms (in order)."""

    total: float
    terms: tuple[float, float, float, float, float, float]


def regret_bound(params: BoundParams, T: int) -> RegretBound:
    """Finite-horizon regret bound; holds up to the constant alpha.

    Term order: buffered-exploitation error, exploration cost, reward-noise
    concentration, estimator failure tail, logarithmic union cost, burn-in.
    """
    if T < params.k_tilde:
        raise ValueError(f"T={T} below the bound's domain start {params.k_tilde}")
    n, w, k = params.n, params.w, params.k
    c_span = (params.r_max + params.gamma) - params.r_min  # incentive interval width
    th = params.theta_max
    logT = math.log(T)
    log2T = math.log(2 * T)
    B = theoretical_B(k, params.k_tilde, params.r_min, params.r_max, params.gamma, n)

    t1 = 12.0 * B / (3.0 - w) * T ** (1.0 - w / 3.0) * math.sqrt(log2T)
    t2 = params.m_pr * (n * c_span + th) * (2.0 / (2.0 * w + 1.0) * T ** (w + 0.5)
                                            + (2.0 * w - 1.0) / (2.0 * w + 1.0))
    t3 = 2.0 * k * th * math.sqrt(T * log2T)
    t4 = (2.0 ** (n + 1) * (th * (2.0 * n ** (11.0 / 6.0) + n ** (-1.0 / 6.0))
                            + n ** (5.0 / 6.0) * c_span * (1.0 + 2.0 * n))
          / (3.0 ** (n + 1) * k * 32.0 ** (1.0 / 6.0)) * math.sqrt(T))
    t5 = n**2 * (c_span + th) * logT
    t6 = th * params.k_tilde
    terms = (t1, t2, t3, t4, t5, t6)
    return RegretBound(total=float(sum(terms)), terms=terms)


def cdf_uniform_difference(delta: float, c_lo: float, c_hi: float) -> float:
    """CDF of the difference of two independent uniforms on [c_lo, c_hi].

    Triangular on [-W, W] with W the interval width.
    """
    if not c_hi > c_lo:
        raise ValueError("c_hi must exceed c_lo")
    W = c_hi - c_lo
    if delta < -W:
        return 0.0
    if delta < 0.0:
        return (delta + W) ** 2 / (2.0 * W**2)
    if delta <= W:
        return 1.0 - (W - delta) ** 2 / (2.0 * W**2)
    return 1.0
