"""Domain types, configuration validation, and reward-vector normalization.

Conventions used across the package:

- Arms are 1-indexed in every public structure and output file (the action
  set is {1..n}); vectorized internals subtract 1 when indexing arrays.
- All reals are double precision.  Argmax comparisons are exact floating
  comparisons with deterministic lowest-index tie-breaking.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

MAX_SEED = 2**64  # seeds are u64


@dataclass(frozen=True)
class GameConfig:
    """All model and algorithm constants for one game setting.

    Defaults correspond to the shipped benchmark setting: agent rewards in
    [-20, 50], incentives in [-20, 60] (gamma = 10), principal rewards in
    [0, 100], Gaussian noise with variance 10 on both sides.
    """

    n: int
    T: int
    r_min: float = -20.0
    r_max: float = 50.0
    gamma: float = 10.0
    theta_max: float = 100.0
    m_pr: float = 5.0
    w: float = 0.2
    m_ag: float = 10.0
    k: float = 1.0
    varsigma: float = 1e-6
    sigma2_ag: float = 10.0
    sigma2_pr: float = 10.0
    buffer_override: float | None = None
    seed: int = 42
    replicates: int = 5

    @property
    def c_lo(self) -> float:
        """Lower end of the feasible incentive range."""
        return self.r_min

    @property
    def c_hi(self) -> float:
        """Upper end of the feasible incentive range (r_max + gamma)."""
        return self.r_max + self.gamma

    @property
    def s_lo(self) -> float:
        """Lower end of the normalized-reward box."""
        return self.r_min - self.r_max

    @property
    def s_hi(self) -> float:
        """Upper end of the normalized-reward box."""
        return self.r_max - self.r_min


CONFIG_FIELDS = tuple(f.name for f in fields(GameConfig))


def validate_config(cfg: GameConfig) -> list[str]:
    """Return the full list of violated invariants (empty list means valid).

    Each check is evaluated independently so that fixing one violation never
    introduces another.
    """
    v: list[str] = []
    if not isinstance(cfg.n, (int, np.integer)) or cfg.n < 2:
        v.append("n must be an integer >= 2")
    if not isinstance(cfg.T, (int, np.integer)) or cfg.T < max(cfg.n, 1):
        v.append("T must be an integer >= n")
    if not cfg.r_max - cfg.r_min >= 1:
        v.append("reward range must satisfy r_max - r_min >= 1")
    if not (0 < cfg.gamma <= cfg.r_max - cfg.r_min - 1):
        v.append("gamma must lie in (0, r_max - r_min - 1]")
    if not cfg.theta_max > 0:
        v.append("theta_max must be positive")
    if not cfg.m_pr >= 1:
        v.append("m_pr must be >= 1")
    if not (0 < cfg.w < 0.25):
        v.append("w must lie in (0, 1/4)")
    if not cfg.m_ag >= 1:
        v.append("m_ag must be >= 1")
    if not cfg.k >= 1:
        v.append("k must be >= 1")
    if not cfg.varsigma > 0:
        v.append("varsigma must be positive")
    if not cfg.sigma2_ag > 0:
        v.append("sigma2_ag must be positive")
    if not cfg.sigma2_pr > 0:
        v.append("sigma2_pr must be positive")
    if cfg.buffer_override is not None and not cfg.buffer_override > 0:
        v.append("buffer_override must be positive when set")
    if not isinstance(cfg.seed, (int, np.integer)) or not 0 <= cfg.seed < MAX_SEED:
        v.append("seed must be an integer in [0, 2^64)")
    if not isinstance(cfg.replicates, (int, np.integer)) or cfg.replicates < 1:
        v.append("replicates must be an integer >= 1")
    return v


@dataclass(frozen=True)
class RewardModel:
    """Ground-truth mean reward vectors, hidden from both policies.

    The engine and the metrics harness may read these; the principal's and
    agent's decision rules never do.
    """

    r0: tuple[float, ...]
    theta0: tuple[float, ...]
    noise: str = "gaussian"

    @property
    def n(self) -> int:
        return len(self.r0)

    @property
    def s0(self) -> np.ndarray:
        return normalize(self.r0)


def validate_model(model: RewardModel, cfg: GameConfig) -> list[str]:
    """Check a reward model against the ranges declared in the config.

    Agent rewards are checked through their normalization: the game is
    invariant under a common shift of r0, and the published n=5 benchmark
    vector itself strays below the nominal interval while normalizing
    cleanly into the estimation box.  The box is what estimation needs.
    """
    v: list[str] = []
    if len(model.r0) != cfg.n or len(model.theta0) != cfg.n:
        v.append("reward vectors must have length n")
        return v
    s0 = model.s0
    if s0.min() < cfg.s_lo or s0.max() > cfg.s_hi:
        v.append("normalized r0 must fit in [r_min - r_max, r_max - r_min]")
    if any(not 0 <= x <= cfg.theta_max for x in model.theta0):
        v.append("every theta0 entry must lie in [0, theta_max]")
    if model.noise != "gaussian":
        v.append("only gaussian noise is shipped")
    return v


def normalize(r) -> np.ndarray:
    """Shift a mean reward vector so that its first entry is 0.

    The agent's behavior is invariant under a common shift of all arm
    rewards, so only the normalized vector is identifiable.
    """
    r = np.asarray(r, dtype=float)
    if r.size == 0:
        raise ValueError("cannot normalize an empty vector")
    return r - r[0]


# Benchmark reward models.  Baked in so tests and presets need no data files.
PRESETS: dict[str, RewardModel] = {
    "table1_n5": RewardModel(
        r0=(14.0, -24.0, -4.0, 19.0, 29.0),
        theta0=(29.0, 1.0, 14.0, 26.0, 15.0),
    ),
    "table1_n10": RewardModel(
        r0=(-4.0, 8.0, 22.0, -12.0, -2.0, 46.0, -8.0, 16.0, 38.0, 14.0),
        theta0=(0.0, 44.0, 51.0, 65.0, 9.0, 35.0, 69.0, 91.0, 51.0, 44.0),
    ),
}


@dataclass(frozen=True)
class HistoryRecord:
    """One step of play as seen by the principal's estimator."""

    t: int
    pi: tuple[float, ...]
    chosen_arm: int  # 1-indexed
    mu: float
    explored_pr: bool
    explored_ag: bool


class History:
    """Append-only sequence of play records, the estimator's sole input.

    Stores columns in growable numpy buffers so the estimator can view the
    incentive matrix and chosen arms without copying.
    """

    def __init__(self, n: int, c_lo: float | None = None, c_hi: float | None = None):
        self.n = int(n)
        self._c_lo = c_lo
        self._c_hi = c_hi
        self._cap = 64
        self._len = 0
        self._pi = np.empty((self._cap, self.n), dtype=float)
        self._chosen = np.empty(self._cap, dtype=np.int64)  # 1-indexed
        self._mu = np.empty(self._cap, dtype=float)
        self._explored_pr = np.empty(self._cap, dtype=bool)
        self._explored_ag = np.empty(self._cap, dtype=bool)

    def __len__(self) -> int:
        return self._len

    def _grow(self) -> None:
        self._cap *= 2
        for name in ("_pi", "_chosen", "_mu", "_explored_pr", "_explored_ag"):
            old = getattr(self, name)
            shape = (self._cap,) + old.shape[1:]
            new = np.empty(shape, dtype=old.dtype)
            new[: self._len] = old[: self._len]
            setattr(self, name, new)

    def append(self, t: int, pi, chosen_arm: int, mu: float,
               explored_pr: bool = False, explored_ag: bool = False) -> None:
        pi = np.asarray(pi, dtype=float)
        if pi.shape != (self.n,):
            raise ValueError(f"incentive vector must have length {self.n}")
        if t != self._len + 1:
            raise ValueError("step indices must increase strictly from 1")
        if not 1 <= chosen_arm <= self.n:
            raise ValueError(f"chosen_arm must lie in 1..{self.n}")
        if self._c_lo is not None and (
            pi.min() < self._c_lo - 1e-9 or pi.max() > self._c_hi + 1e-9
        ):
            raise ValueError("incentive entry outside the feasible range")
        if self._len == self._cap:
            self._grow()
        i = self._len
        self._pi[i] = pi
        self._chosen[i] = chosen_arm
        self._mu[i] = mu
        self._explored_pr[i] = explored_pr
        self._explored_ag[i] = explored_ag
        self._len = i + 1

    @property
    def pi_matrix(self) -> np.ndarray:
        """(len, n) view of all incentive vectors."""
        return self._pi[: self._len]

    @property
    def chosen(self) -> np.ndarray:
        """(len,) view of chosen arms, 1-indexed."""
        return self._chosen[: self._len]

    @property
    def chosen_idx(self) -> np.ndarray:
        """(len,) chosen arms as 0-indexed array positions."""
        return self._chosen[: self._len] - 1

    @property
    def explored_pr(self) -> np.ndarray:
        return self._explored_pr[: self._len]

    def records(self) -> list[HistoryRecord]:
        return [
            HistoryRecord(
                t=i + 1,
                pi=tuple(self._pi[i]),
                chosen_arm=int(self._chosen[i]),
                mu=float(self._mu[i]),
                explored_pr=bool(self._explored_pr[i]),
                explored_ag=bool(self._explored_ag[i]),
            )
            for i in range(self._len)
        ]

    @classmethod
    def from_steps(cls, n: int, pis, arms, mus=None,
                   c_lo: float | None = None, c_hi: float | None = None) -> "History":
        """Build a history from parallel sequences, mostly for tests."""
        h = cls(n, c_lo=c_lo, c_hi=c_hi)
        for i, (pi, arm) in enumerate(zip(pis, arms)):
            mu = 0.0 if mus is None else float(mus[i])
            h.append(i + 1, pi, int(arm), mu)
        return h
