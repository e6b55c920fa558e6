"""The principal's side of the game: reward tracking, the epsilon-greedy
incentive schedule, buffered exploitation, and the full-information oracle.

Exploitation offers a single positive incentive on the arm estimated to
maximize the principal's net value, padded by twice the buffer beta_t so the
target stays the agent's best response despite estimation error.  All
argmax ties break to the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import compute_k_tilde, theoretical_B
from .estimator import NormalizedRewardEstimate
from .game import GameConfig


class EstimatorStepError(RuntimeError):
    """Estimation failed inside a policy step; carries the step index."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


@dataclass
class PrincipalState:
    """Mutable per-episode state for the learning principal."""

    theta_hat: np.ndarray  # per-arm sample means of observed mu
    counts: np.ndarray  # per-arm visit counts
    s_hat: NormalizedRewardEstimate | None
    step: int
    rng: np.random.Generator

    @classmethod
    def fresh(cls, n: int, rng: np.random.Generator) -> "PrincipalState":
        return cls(theta_hat=np.zeros(n), counts=np.zeros(n, dtype=np.int64),
                   s_hat=None, step=0, rng=rng)


@dataclass(frozen=True)
class IncentiveDecision:
    pi: np.ndarray
    mode: str  # init | explore | exploit | oracle
    target_arm: int | None  # 1-indexed
    beta: float


def update_theta_hat(state: PrincipalState, arm: int, mu: float) -> PrincipalState:
    """Fold one observed principal reward into the chosen arm's running mean."""
    if not 1 <= arm <= state.theta_hat.size:
        raise ValueError(f"arm must lie in 1..{state.theta_hat.size}")
    if not np.isfinite(mu):
        raise ValueError("mu must be finite")
    i = arm - 1
    state.counts[i] += 1
    state.theta_hat[i] += (mu - state.theta_hat[i]) / state.counts[i]
    return state


def exploration_prob(t: int, m_pr: float, w: float) -> float:
    """min(1, m_pr / t^(1/2 - w))"""
    if t < 1:
        raise ValueError("t must be at least 1")
    return min(1.0, m_pr / t ** (0.5 - w))


def compute_B(k: float, k_tilde: int, r_min: float, r_max: float, gamma: float,
              n: int) -> float:
    """Theoretical buffer scale; see the override note on resolve_buffer."""
    return theoretical_B(k, k_tilde, r_min, r_max, gamma, n)


def beta_value(b_eff: float, t: int, w: float) -> float:
    """Buffer at step t under scale b_eff: b_eff * sqrt(log 2t) / t^(w/3)."""
    return b_eff * np.sqrt(np.log(2.0 * t)) / t ** (w / 3.0)


def default_buffer_override(gamma: float, T: int, w: float) -> float:
    """Scale that keeps the padding within the incentive range: 2*beta_T = gamma.

    The theoretical scale makes the padding exceed the whole incentive
    interval at any practical horizon, so every shipped experiment config
    replaces it with this one.
    """
    return gamma * T ** (w / 3.0) / (2.0 * np.sqrt(np.log(2.0 * T)))


def resolve_buffer(config: GameConfig) -> float:
    """buffer_override if set, else the theoretical scale."""
    if config.buffer_override is not None:
        return float(config.buffer_override)
    return compute_B(config.k, compute_k_tilde(config.k), config.r_min,
                     config.r_max, config.gamma, config.n)


def exploitation_incentives(theta_hat: np.ndarray, s_hat: np.ndarray,
                            beta_t: float, config: GameConfig) -> IncentiveDecision:
    """Target the arm maximizing estimated net value under buffered incentives.

    Estimated value of pushing arm j: theta_hat_j - max(s_hat) + s_hat_j
    - 2*beta_t.  The winner gets incentive max(s_hat) - s_hat_j + 2*beta_t,
    everyone else 0, and the vector is then clipped into the feasible range.
    """
    if beta_t < 0:
        raise ValueError("beta_t must be nonnegative")
    theta_hat = np.asarray(theta_hat, dtype=float)
    s_hat = np.asarray(s_hat, dtype=float)
    top = s_hat.max()
    values = theta_hat - top + s_hat - 2.0 * beta_t
    j = int(values.argmax())
    pi = np.zeros(theta_hat.size)
    pi[j] = top - s_hat[j] + 2.0 * beta_t
    np.clip(pi, config.c_lo, config.c_hi, out=pi)
    return IncentiveDecision(pi=pi, mode="exploit", target_arm=j + 1,
                             beta=float(beta_t))


def oracle_incentives(theta0: np.ndarray, s0: np.ndarray,
                      varsigma: float) -> IncentiveDecision:
    """Full-information benchmark: the exploitation rule at true values.

    The pad shrinks to the tie-breaker varsigma, which makes the target arm
    the agent's unique best response.  No clipping here; with any sane
    parameterization the value is interior.
    """
    if varsigma <= 0:
        raise ValueError("varsigma must be positive")
    theta0 = np.asarray(theta0, dtype=float)
    s0 = np.asarray(s0, dtype=float)
    top = s0.max()
    j = int((theta0 - top + s0).argmax())
    pi = np.zeros(theta0.size)
    pi[j] = top - s0[j] + varsigma
    return IncentiveDecision(pi=pi, mode="oracle", target_arm=j + 1, beta=0.0)


def principal_step(state: PrincipalState, t: int, estimator_handle,
                   config: GameConfig,
                   b_eff: float | None = None) -> tuple[IncentiveDecision, PrincipalState]:
    """One decision of the epsilon-greedy schedule.

    Steps 1..n initialize by paying C_hi on arm t alone.  Afterwards a
    Bernoulli(eps_t) draw picks between i.i.d. uniform incentives on the
    feasible box (explore) and buffered exploitation against a fresh
    estimate from estimator_handle(t).
    """
    n = config.n
    if not 1 <= t <= config.T:
        raise ValueError(f"t must lie in 1..{config.T}")
    state.step = t
    if t <= n:
        pi = np.zeros(n)
        pi[t - 1] = config.c_hi
        return IncentiveDecision(pi=pi, mode="init", target_arm=t, beta=0.0), state

    if state.rng.random() < exploration_prob(t, config.m_pr, config.w):
        pi = state.rng.uniform(config.c_lo, config.c_hi, n)
        return IncentiveDecision(pi=pi, mode="explore", target_arm=None,
                                 beta=0.0), state

    try:
        estimate = estimator_handle(t)
    except Exception as exc:
        raise EstimatorStepError(f"estimation failed at step {t}: {exc}", t) from exc
    state.s_hat = estimate
    scale = resolve_buffer(config) if b_eff is None else b_eff
    beta_t = float(beta_value(scale, t, config.w))
    return exploitation_incentives(state.theta_hat, estimate.s_hat, beta_t,
                                   config), state
