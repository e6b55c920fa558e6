"""Agents choosing arms in response to posted incentives.

The agent sees only the incentive vector and its own reward draws; nothing
about the principal's rewards or estimates ever crosses the interface.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np


class AgentInterface(Protocol):
    """Behavioral contract: decide on an arm, then absorb the reward draw."""

    def decide(self, t: int, pi: np.ndarray) -> int: ...

    def observe(self, t: int, arm: int, rho: float) -> None: ...


def agent_exploration_prob(t: int, m_ag: float) -> float:
    """min(1, m_ag / sqrt(t)); equals 1 through t = m_ag^2."""
    if t < 1:
        raise ValueError("t must be at least 1")
    return min(1.0, m_ag / np.sqrt(t))


class EpsilonGreedyAgent:
    """Epsilon-greedy bandit over own mean-reward estimates.

    First n steps pull each arm once in order; afterwards explores a
    uniform arm with probability min(1, m_ag/sqrt(t)) and otherwise plays
    argmax(s_hat_ag + pi), ties to the lowest index.  s_hat_ag holds
    per-arm sample means of the observed rewards.
    """

    def __init__(self, n: int, m_ag: float, rng: np.random.Generator):
        if n < 1:
            raise ValueError("n must be positive")
        if m_ag <= 0:
            raise ValueError("m_ag must be positive")
        self.n = n
        self.m_ag = float(m_ag)
        self.rng = rng
        self.s_hat_ag = np.zeros(n)
        self.counts = np.zeros(n, dtype=np.int64)
        self.last_explored = False

    def decide(self, t: int, pi: np.ndarray) -> int:
        if t <= self.n:
            self.last_explored = False
            return t
        if self.rng.random() < agent_exploration_prob(t, self.m_ag):
            self.last_explored = True
            return int(self.rng.integers(1, self.n + 1))
        self.last_explored = False
        return int((self.s_hat_ag + pi).argmax()) + 1

    def observe(self, t: int, arm: int, rho: float) -> None:
        i = arm - 1
        self.counts[i] += 1
        self.s_hat_ag[i] += (rho - self.s_hat_ag[i]) / self.counts[i]


class PerfectAgent:
    """Plays the true best response argmax(s0 + pi) at every step.

    A harness construct: it knows the true normalized rewards, which makes
    every recorded choice exactly rationalizable (zero estimation loss at
    s0).  Used by estimator tests and available as agent="perfect".
    """

    def __init__(self, s0: np.ndarray):
        self.s0 = np.asarray(s0, dtype=float)
        self.n = self.s0.size
        self.last_explored = False

    def decide(self, t: int, pi: np.ndarray) -> int:
        return int((self.s0 + pi).argmax()) + 1

    def observe(self, t: int, arm: int, rho: float) -> None:
        pass


def agent_step(state, t: int, pi: np.ndarray):
    """Functional wrapper: one decision from any AgentInterface implementation."""
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 1 or pi.size != getattr(state, "n", pi.size):
        raise ValueError("pi must be a vector of length n")
    return state.decide(t, pi), state


def measure_pt(trace, s0) -> list[tuple[int, int]]:
    """Per-step indicators 1{chosen arm is not the true utility maximizer}.

    Accepts a completed trace or a raw history; s0 is harness knowledge,
    never the agent's.
    """
    h = getattr(trace, "history", trace)
    s0 = np.asarray(s0, dtype=float)
    best = (h.pi_matrix + s0).argmax(axis=1)
    miss = (h.chosen_idx != best).astype(int)
    return [(i + 1, int(m)) for i, m in enumerate(miss)]


def windowed_pt(measurements, t: int, fraction: float = 0.25) -> float:
    """Empirical inaccuracy rate over the half-open late window (fraction*t, t].

    Any fixed fractional window gives the same expected decay shape for the
    rate statistic, so the window is chosen wide (last three quarters) to cut
    sampling variance.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError("fraction must lie in [0, 1)")
    lo = t * fraction
    vals = [ind for step, ind in measurements if lo < step <= t]
    if not vals:
        raise ValueError(f"no measurements in window ({lo}, {t}]")
    return float(np.mean(vals))
