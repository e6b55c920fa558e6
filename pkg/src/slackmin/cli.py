"""Command line front end: run experiments, sweep horizons, emit bound tables.

Everything an invocation writes is reproducible byte for byte from the
manifest saved next to it: the manifest captures the resolved config (seed
and solver overrides applied), the reward-model source, and the tool
version.  Wallclock numbers therefore never go into the CSVs; they live in
a timing.json sidecar.

Exit codes: 0 success, 1 runtime failure, 2 config violation.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import BoundParams, concentration_bound, lambda_t, pt_bound, regret_bound
from .engine import SOLVER_MODES, ResultTable, Trace, run_experiment
from .game import (CONFIG_FIELDS, GameConfig, PRESETS, RewardModel,
                   validate_config, validate_model)

TOOL_NAME = "slackmin"

_MODEL_KEYS = ("preset", "r0", "theta0")
_SUMMARY_COLUMNS = ("n", "T", "replicate", "seed",
                    "linf_final", "l1_final", "regret_final")
_TRACE_COLUMNS = ("t", "mode", "chosen_arm", "incentive_sum",
                  "regret_cum", "linf_err", "agent_correct")


class ConfigError(ValueError):
    """Config file problem; maps to exit code 2."""


def _fmt(value) -> str:
    """CSV cell formatting: floats at 10 significant digits, NaN as empty."""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.10g}"
    return str(value)


# ---------------------------------------------------------------------------
# config files


def load_config(path) -> tuple[GameConfig, RewardModel, str, dict]:
    """Parse a config JSON file.

    The file holds flat GameConfig fields plus exactly one reward-model
    source: either {"preset": name} or inline {"r0": [...], "theta0": [...]}.
    Returns (config, model, model_name, model_source).  Raises ConfigError
    on structural problems; range violations are left to the validators.
    """
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")

    unknown = sorted(set(raw) - set(CONFIG_FIELDS) - set(_MODEL_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    has_preset = "preset" in raw
    has_inline = "r0" in raw or "theta0" in raw
    if has_preset and has_inline:
        raise ConfigError("give either a preset name or inline r0/theta0, not both")
    if has_preset:
        name = raw["preset"]
        if name not in PRESETS:
            raise ConfigError(
                f"unknown preset {name!r}; choices: {', '.join(sorted(PRESETS))}")
        model = PRESETS[name]
        model_name = name
        source = {"preset": name}
    elif "r0" in raw and "theta0" in raw:
        try:
            r0 = tuple(float(v) for v in raw["r0"])
            theta0 = tuple(float(v) for v in raw["theta0"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"r0/theta0 must be numeric arrays: {exc}") from exc
        model = RewardModel(r0=r0, theta0=theta0)
        model_name = f"inline_n{len(r0)}"
        source = {"r0": list(r0), "theta0": list(theta0)}
    else:
        raise ConfigError("config must name a preset or give both r0 and theta0")

    missing = [key for key in ("n", "T") if key not in raw]
    if missing:
        raise ConfigError(f"required config keys missing: {', '.join(missing)}")
    kwargs = {key: raw[key] for key in CONFIG_FIELDS if key in raw}
    try:
        config = GameConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return config, model, model_name, source


def _validate_or_die(config: GameConfig, model: RewardModel) -> None:
    problems = validate_config(config) + validate_model(model, config)
    if problems:
        raise ConfigError("; ".join(problems))


# ---------------------------------------------------------------------------
# manifest


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to regenerate an output directory exactly."""

    tool: str
    version: str
    created: str
    config: dict
    model_source: dict
    out_dir: str
    solver: str
    jobs: int

    @classmethod
    def build(cls, config: GameConfig, model_source: dict, out_dir,
              solver: str, jobs: int) -> "RunManifest":
        created = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        return cls(tool=TOOL_NAME, version=__version__, created=created,
                   config=dataclasses.asdict(config),
                   model_source=dict(model_source), out_dir=str(out_dir),
                   solver=solver, jobs=jobs)

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n")


def load_manifest(path) -> RunManifest:
    data = json.loads(Path(path).read_text())
    return RunManifest(**data)


# ---------------------------------------------------------------------------
# CSV writers


def _summary_rows(table: ResultTable) -> list[list[str]]:
    cfg = table.config
    rows = []
    for r in table.rows:
        rows.append([_fmt(cfg.n), _fmt(cfg.T), _fmt(r.replicate), _fmt(r.seed),
                     _fmt(r.linf_final), _fmt(r.l1_final), _fmt(r.regret_final)])
    for label, stats in (("mean", table.mean), ("std", table.std),
                         ("stderr", table.stderr)):
        rows.append([_fmt(cfg.n), _fmt(cfg.T), label, "",
                     _fmt(stats["linf_final"]), _fmt(stats["l1_final"]),
                     _fmt(stats["regret_final"])])
    return rows


def write_summary_csv(path, table: ResultTable) -> None:
    """Replicate rows in order, then mean/std/stderr aggregate rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_SUMMARY_COLUMNS)
        writer.writerows(_summary_rows(table))


def write_sweep_csv(path, tables: list[ResultTable]) -> None:
    """Replicate rows only, keyed (n, T, replicate), sorted."""
    rows = []
    for table in tables:
        for r in table.rows:
            rows.append((table.config.n, table.config.T, r.replicate, r))
    rows.sort(key=lambda item: item[:3])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_SUMMARY_COLUMNS)
        for n, T, rep, r in rows:
            writer.writerow([_fmt(n), _fmt(T), _fmt(rep), _fmt(r.seed),
                             _fmt(r.linf_final), _fmt(r.l1_final),
                             _fmt(r.regret_final)])


def write_trace_csv(path, trace: Trace) -> None:
    history = trace.history
    regret_cum = np.cumsum(trace.regret_increment)
    pi_sum = history.pi_matrix.sum(axis=1)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_TRACE_COLUMNS)
        for i in range(trace.config.T):
            writer.writerow([
                _fmt(i + 1), trace.mode[i], _fmt(int(history.chosen[i])),
                _fmt(float(pi_sum[i])), _fmt(float(regret_cum[i])),
                _fmt(float(trace.linf_error[i])),
                _fmt(int(trace.agent_correct[i])),
            ])


# ---------------------------------------------------------------------------
# bounds table


def write_bounds_csv(path, config: GameConfig) -> None:
    """Theoretical curves over t in [k_tilde, T], one row per step.

    The expected exploration count is a prefix sum, so it is accumulated
    once instead of re-summed per row.
    """
    params = BoundParams.from_config(config)
    start = params.k_tilde
    if config.T < start:
        raise ConfigError(
            f"T={config.T} is below k_tilde={start}; no rows to emit")

    taus = np.arange(1, config.T, dtype=float)
    eps = np.minimum(1.0, params.m_pr / taus ** (0.5 - params.w))
    lo = max(params.k_tilde, params.n + 1)
    eps[taus < lo] = 0.0
    eta_prefix = np.concatenate([[0.0], np.cumsum(eps)])  # eta_prefix[t-1] = E[eta_t]

    header = ["t", "pt_bound", "eta_expected", "lambda",
              "concentration_raw", "concentration", "regret_total"]
    header += [f"regret_term{i}" for i in range(1, 7)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for t in range(start, config.T + 1):
            eta = float(eta_prefix[t - 1])
            lam = lambda_t(params, eta, t)
            raw, clamped = concentration_bound(params, lam, params.beta, t)
            reg = regret_bound(params, t)
            row = [_fmt(t), _fmt(pt_bound(params.k, t)), _fmt(eta), _fmt(lam),
                   _fmt(raw), _fmt(clamped), _fmt(reg.total)]
            row += [_fmt(term) for term in reg.terms]
            writer.writerow(row)


# ---------------------------------------------------------------------------
# commands


def _point_dir(out_dir, model_name: str, T: int) -> Path:
    return Path(out_dir) / model_name / str(T)


def _run_point(config: GameConfig, model: RewardModel, model_name: str,
               model_source: dict, out_dir, solver: str,
               jobs: int) -> tuple[ResultTable, Path]:
    """One experiment at one horizon, with its full output directory."""
    base = _point_dir(out_dir, model_name, config.T)
    base.mkdir(parents=True, exist_ok=True)
    RunManifest.build(config, model_source, out_dir, solver, jobs).save(
        base / "manifest.json")
    t0 = time.perf_counter()
    table = run_experiment(config, model, solver=solver, jobs=jobs,
                           keep_traces=True)
    total = time.perf_counter() - t0
    for row, trace in zip(table.rows, table.traces):
        if trace is None:
            continue
        rep_dir = base / f"replicate_{row.replicate}"
        rep_dir.mkdir(exist_ok=True)
        write_trace_csv(rep_dir / "trace.csv", trace)
    write_summary_csv(base / "summary.csv", table)
    timing = {"total_s": total,
              "replicates": {str(r.replicate): r.wallclock_s for r in table.rows}}
    (base / "timing.json").write_text(json.dumps(timing, indent=2) + "\n")
    return table, base


def _apply_overrides(config: GameConfig, args) -> GameConfig:
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    return config


def _report_replicate_errors(table: ResultTable) -> int:
    failed = [r for r in table.rows if r.error is not None]
    for r in failed:
        print(f"replicate {r.replicate} failed: {r.error}", file=sys.stderr)
    return len(failed)


def cmd_run(args) -> int:
    config, model, model_name, source = load_config(args.config)
    config = _apply_overrides(config, args)
    _validate_or_die(config, model)
    table, base = _run_point(config, model, model_name, source,
                             args.out, args.solver, args.jobs)
    print(f"wrote {base / 'summary.csv'}")
    return 1 if _report_replicate_errors(table) else 0


def cmd_sweep(args) -> int:
    config, model, model_name, source = load_config(args.config)
    config = _apply_overrides(config, args)
    T_list = args.T_list
    if not T_list:
        raise ConfigError("--T-list must name at least one horizon")
    tables = []
    failures = {}
    for T in sorted(set(T_list)):
        point_cfg = dataclasses.replace(config, T=T)
        try:
            _validate_or_die(point_cfg, model)
            table, _ = _run_point(point_cfg, model, model_name, source,
                                  args.out, args.solver, args.jobs)
        except Exception as exc:  # keep sweeping; report at the end
            failures[T] = f"{type(exc).__name__}: {exc}"
            print(f"T={T} failed: {failures[T]}", file=sys.stderr)
            continue
        if _report_replicate_errors(table):
            failures[T] = "replicate failure (see stderr)"
        tables.append(table)
    sweep_path = Path(args.out) / model_name / "sweep.csv"
    write_sweep_csv(sweep_path, tables)
    print(f"wrote {sweep_path}")
    if failures:
        (Path(args.out) / model_name / "failures.json").write_text(
            json.dumps({str(k): v for k, v in sorted(failures.items())},
                       indent=2) + "\n")
        return 1
    return 0


def cmd_bounds(args) -> int:
    config, model, model_name, _ = load_config(args.config)
    config = _apply_overrides(config, args)
    _validate_or_die(config, model)
    base = Path(args.out) / model_name
    base.mkdir(parents=True, exist_ok=True)
    path = base / "bounds.csv"
    write_bounds_csv(path, config)
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _parse_t_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad T list {text!r}: {exc}")
    if not values:
        raise argparse.ArgumentTypeError("T list is empty")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=TOOL_NAME,
        description="Hidden-reward principal-agent game simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="config JSON path")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="parallel workers (default: logical cores)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--solver", choices=SOLVER_MODES, default="hybrid",
                       help="estimator backend (default: hybrid)")

    p_run = sub.add_parser("run", help="one experiment at the config horizon")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="experiments across horizons")
    common(p_sweep)
    p_sweep.add_argument("--T-list", dest="T_list", type=_parse_t_list,
                         required=True, help="comma-separated horizons")
    p_sweep.set_defaults(func=cmd_sweep)

    p_bounds = sub.add_parser("bounds", help="theoretical bound curves as CSV")
    common(p_bounds)
    p_bounds.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure, not a usage problem
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
