"""Simulation library for a repeated hidden-reward principal-agent game.

The principal steers an agent with per-arm incentive payments while
estimating the agent's normalized mean rewards from its choices alone, via
a slack-minimization linear program.  The package provides the estimator,
the incentive policy and its oracle benchmark, an epsilon-greedy agent,
theoretical bound evaluators, and a seeded experiment harness with a CSV
command line front end.
"""

from .agent import EpsilonGreedyAgent, PerfectAgent, measure_pt, windowed_pt
from .bounds import (BoundParams, compute_k_tilde, concentration_bound,
                     cdf_uniform_difference, expected_eta, lambda_t, pt_bound,
                     regret_bound, theoretical_B)
from .engine import (ResultTable, Trace, cumulative_regret, derive_seed,
                     run_episode, run_experiment, trace_pt)
from .estimator import (NormalizedRewardEstimate, brute_force_grid,
                        solve_exact_lp, solve_subgradient, total_loss)
from .game import GameConfig, PRESETS, RewardModel, normalize
from .principal import exploitation_incentives, oracle_incentives, principal_step

__version__ = "0.1.0"

__all__ = [
    "BoundParams", "EpsilonGreedyAgent", "GameConfig", "NormalizedRewardEstimate",
    "PerfectAgent", "PRESETS", "ResultTable", "RewardModel", "Trace",
    "brute_force_grid", "cdf_uniform_difference", "compute_k_tilde",
    "concentration_bound", "cumulative_regret", "derive_seed", "expected_eta",
    "exploitation_incentives", "lambda_t", "measure_pt", "normalize",
    "oracle_incentives", "principal_step", "pt_bound", "regret_bound",
    "run_episode", "run_experiment", "solve_exact_lp", "solve_subgradient",
    "theoretical_B", "total_loss", "trace_pt", "windowed_pt",
]
