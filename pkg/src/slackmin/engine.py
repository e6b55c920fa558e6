"""Episode orchestration and experiment replication.

One episode is strictly sequential: the principal posts incentives, the
agent picks an arm, both sides draw rewards, each updates from what it is
allowed to see.  The harness alone touches the true model; policies only
see their own observation streams.

Estimation cost dominates long episodes, so exploitation steps share a
schedule: "exact" solves the full problem at every exploitation step,
"hybrid" takes an exact solve every exact_every-th exploitation and cheap
warm-started subgradient passes in between, "subgradient" never solves
exactly (the final reported estimate then comes from a longer subgradient
run).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .agent import EpsilonGreedyAgent, PerfectAgent, measure_pt
from .estimator import (NormalizedRewardEstimate, solve_exact_lp,
                        solve_subgradient)
from .game import GameConfig, History, RewardModel, validate_config, validate_model
from .principal import (IncentiveDecision, PrincipalState, oracle_incentives,
                        principal_step, resolve_buffer, update_theta_hat)

SOLVER_MODES = ("exact", "hybrid", "subgradient")


@dataclass
class Trace:
    """Complete record of one episode plus derived metrics."""

    config: GameConfig
    history: History
    mode: list[str]  # per step: init | explore | exploit | oracle
    mu: np.ndarray
    rho: np.ndarray
    regret_increment: np.ndarray
    agent_correct: np.ndarray
    linf_error: np.ndarray  # NaN except where the estimate was refreshed
    s_hat_final: np.ndarray | None
    pi_final: np.ndarray
    oracle_pi: np.ndarray
    oracle_value: float
    l1_final: float
    seed: int


def l1_policy_distance(pi_T, oracle_pi) -> float:
    """Distance between the final posted incentives and the oracle's."""
    pi_T = np.asarray(pi_T, dtype=float)
    oracle_pi = np.asarray(oracle_pi, dtype=float)
    if pi_T.shape != oracle_pi.shape:
        raise ValueError("incentive vectors must have equal length")
    return float(np.abs(pi_T - oracle_pi).sum())


def cumulative_regret(trace: Trace) -> np.ndarray:
    return np.cumsum(trace.regret_increment)


def _make_agent(agent, model: RewardModel, config: GameConfig,
                rng: np.random.Generator):
    if agent is None or agent == "epsilon":
        return EpsilonGreedyAgent(config.n, config.m_ag, rng)
    if agent == "perfect":
        return PerfectAgent(model.s0)
    return agent


class _EstimatorSchedule:
    """Chooses between exact and warm subgradient solves at exploit steps."""

    def __init__(self, history: History, bounds: tuple[float, float],
                 solver: str, exact_every: int, sub_iters: int):
        if solver not in SOLVER_MODES:
            raise ValueError(f"solver must be one of {SOLVER_MODES}")
        self.history = history
        self.bounds = bounds
        self.solver = solver
        self.exact_every = max(1, exact_every)
        self.sub_iters = sub_iters
        self.calls = 0
        self.last: NormalizedRewardEstimate | None = None

    def __call__(self, t: int) -> NormalizedRewardEstimate:
        warm = self.last
        if self.solver == "exact":
            est = solve_exact_lp(self.history, self.bounds)
        elif self.solver == "hybrid":
            if self.calls % self.exact_every == 0 or warm is None:
                est = solve_exact_lp(self.history, self.bounds)
            else:
                est = solve_subgradient(self.history, self.bounds,
                                        max_iters=self.sub_iters,
                                        x0=warm.s_hat,
                                        f_target=warm.objective)
        else:
            est = solve_subgradient(self.history, self.bounds,
                                    max_iters=4 * self.sub_iters,
                                    x0=None if warm is None else warm.s_hat)
        self.calls += 1
        self.last = est
        return est

    def final(self) -> NormalizedRewardEstimate:
        if self.solver in ("exact", "hybrid"):
            return solve_exact_lp(self.history, self.bounds)
        return solve_subgradient(self.history, self.bounds,
                                 max_iters=12 * self.sub_iters,
                                 x0=None if self.last is None else self.last.s_hat)


def run_episode(config: GameConfig, model: RewardModel, agent=None,
                seed: int | None = None, principal: str = "learning",
                solver: str = "hybrid", exact_every: int = 50,
                sub_iters: int = 15) -> Trace:
    """Play the game for T steps; deterministic given (config, model, seed).

    agent: None/"epsilon" for the learning agent, "perfect" for the scripted
    best responder, or any object with decide/observe.  principal:
    "learning" runs the epsilon-greedy schedule, "oracle" posts the
    full-information incentives at every step.
    """
    problems = validate_config(config) + validate_model(model, config)
    if problems:
        raise ValueError("; ".join(problems))
    if principal not in ("learning", "oracle"):
        raise ValueError('principal must be "learning" or "oracle"')

    if seed is None:
        seed = config.seed
    streams = np.random.SeedSequence(seed).spawn(4)
    rng_pr = np.random.default_rng(streams[0])
    rng_ag = np.random.default_rng(streams[1])
    noise_pr = np.random.default_rng(streams[2])
    noise_ag = np.random.default_rng(streams[3])

    n, T = config.n, config.T
    theta0 = np.asarray(model.theta0, dtype=float)
    r0 = np.asarray(model.r0, dtype=float)
    s0 = model.s0
    sd_pr = np.sqrt(config.sigma2_pr)
    sd_ag = np.sqrt(config.sigma2_ag)

    oracle_dec = oracle_incentives(theta0, s0, config.varsigma)
    oracle_pi = oracle_dec.pi
    oracle_value = float(theta0[oracle_dec.target_arm - 1] - oracle_pi.sum())

    state = PrincipalState.fresh(n, rng_pr)
    pl_agent = _make_agent(agent, model, config, rng_ag)
    history = History(n)
    schedule = _EstimatorSchedule(history, (config.s_lo, config.s_hi), solver,
                                  exact_every, sub_iters)
    b_eff = resolve_buffer(config) if principal == "learning" else None

    mode = []
    mu_arr = np.empty(T)
    rho_arr = np.empty(T)
    regret = np.empty(T)
    correct = np.empty(T, dtype=bool)
    linf = np.full(T, np.nan)

    for t in range(1, T + 1):
        if principal == "oracle":
            decision: IncentiveDecision = oracle_dec
        else:
            decision, state = principal_step(state, t, schedule, config, b_eff)
        pi = decision.pi

        arm = pl_agent.decide(t, pi.copy())
        rho = float(noise_ag.normal(r0[arm - 1], sd_ag))
        mu = float(noise_pr.normal(theta0[arm - 1], sd_pr))
        pl_agent.observe(t, arm, rho)
        if principal == "learning":
            update_theta_hat(state, arm, mu)
        history.append(t, pi, arm, mu,
                       explored_pr=decision.mode == "explore",
                       explored_ag=getattr(pl_agent, "last_explored", False))

        mode.append(decision.mode)
        mu_arr[t - 1] = mu
        rho_arr[t - 1] = rho
        regret[t - 1] = oracle_value - (theta0[arm - 1] - pi.sum())
        correct[t - 1] = (s0 + pi).argmax() == arm - 1
        if decision.mode == "exploit":
            est = schedule.last
            linf[t - 1] = float(np.abs(s0 - est.s_hat).max())

    s_hat_final = None
    if principal == "learning":
        final_est = schedule.final()
        state.s_hat = final_est
        s_hat_final = final_est.s_hat
        linf[T - 1] = float(np.abs(s0 - s_hat_final).max())

    pi_final = history.pi_matrix[T - 1].copy()
    return Trace(config=config, history=history, mode=mode, mu=mu_arr,
                 rho=rho_arr, regret_increment=regret, agent_correct=correct,
                 linf_error=linf, s_hat_final=s_hat_final, pi_final=pi_final,
                 oracle_pi=oracle_pi, oracle_value=oracle_value,
                 l1_final=l1_policy_distance(pi_final, oracle_pi), seed=seed)


@dataclass(frozen=True)
class ReplicateResult:
    replicate: int
    seed: int
    linf_final: float
    l1_final: float
    regret_final: float
    wallclock_s: float
    error: str | None = None


@dataclass
class ResultTable:
    """Per-replicate metrics with mean/std/stderr aggregates.

    Error-bar convention differs across figures in the wild, so both the
    standard deviation (ddof 0) and the standard error are kept.
    """

    config: GameConfig
    rows: list[ReplicateResult]
    mean: dict[str, float] = field(default_factory=dict)
    std: dict[str, float] = field(default_factory=dict)
    stderr: dict[str, float] = field(default_factory=dict)
    traces: list[Trace | None] = field(default_factory=list)


METRICS = ("linf_final", "l1_final", "regret_final")


def derive_seed(master_seed: int, replicate: int) -> int:
    """Stable per-replicate seed from the master seed."""
    ss = np.random.SeedSequence((master_seed, replicate))
    return int(ss.generate_state(1, np.uint64)[0])


def _run_replicate(config: GameConfig, model: RewardModel, replicate: int,
                   agent, principal: str, solver: str,
                   keep_trace: bool) -> tuple[ReplicateResult, Trace | None]:
    seed = derive_seed(config.seed, replicate)
    t0 = time.perf_counter()
    try:
        trace = run_episode(config, model, agent=agent, seed=seed,
                            principal=principal, solver=solver)
    except Exception as exc:
        wall = time.perf_counter() - t0
        return ReplicateResult(replicate=replicate, seed=seed,
                               linf_final=float("nan"), l1_final=float("nan"),
                               regret_final=float("nan"), wallclock_s=wall,
                               error=f"{type(exc).__name__}: {exc}"), None
    wall = time.perf_counter() - t0
    linf_final = (float("nan") if trace.s_hat_final is None
                  else float(trace.linf_error[config.T - 1]))
    row = ReplicateResult(replicate=replicate, seed=seed,
                          linf_final=linf_final, l1_final=trace.l1_final,
                          regret_final=float(trace.regret_increment.sum()),
                          wallclock_s=wall)
    return row, trace if keep_trace else None


def run_experiment(config: GameConfig, model: RewardModel,
                   replicates: int | None = None, agent=None,
                   principal: str = "learning", solver: str = "hybrid",
                   jobs: int = 1, keep_traces: bool = False) -> ResultTable:
    """Independent replicates of one (config, model) setting.

    Per-replicate failures are recorded in their row; the table is always
    produced.  Seeds derive from config.seed and the replicate index only,
    so the same master seed reproduces the same table.
    """
    R = config.replicates if replicates is None else replicates
    if R < 1:
        raise ValueError("replicates must be at least 1")
    args = [(config, model, i, agent, principal, solver, keep_traces)
            for i in range(1, R + 1)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_replicate_star, args))
    else:
        results = [_run_replicate(*a) for a in args]

    results.sort(key=lambda pair: pair[0].replicate)
    rows = [r for r, _ in results]
    traces = [tr for _, tr in results]
    table = ResultTable(config=config, rows=rows, traces=traces)
    good = [r for r in rows if r.error is None]
    for name in METRICS:
        vals = np.array([getattr(r, name) for r in good], dtype=float)
        vals = vals[np.isfinite(vals)]
        if vals.size:
            table.mean[name] = float(vals.mean())
            table.std[name] = float(vals.std(ddof=0))
            table.stderr[name] = float(vals.std(ddof=0) / np.sqrt(vals.size))
        else:
            table.mean[name] = float("nan")
            table.std[name] = float("nan")
            table.stderr[name] = float("nan")
    return table


def _replicate_star(args):
    return _run_replicate(*args)


def trace_pt(trace: Trace, model: RewardModel):
    """Per-step true-best-response miss indicators for a finished episode."""
    return measure_pt(trace, model.s0)
