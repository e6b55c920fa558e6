"""Figure rendering from the experiment CSV artifacts.

Three metrics are understood.  linf_final and l1_final read sweep-style
rows (n, T, replicate, metric columns) and draw a grouped bar chart with
one bar per (n, T) cell, mean over replicates, std as the error bar.
regret_curve reads trace-style rows (t, regret_cum, optional replicate)
and draws the mean cumulative-regret curve with a std band, optionally
overlaying the theoretical curve from a bounds CSV.

Output is PNG only: the bytes must be identical across runs on the same
input, and the other matplotlib formats embed dates or randomized ids.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

METRICS = ("linf_final", "l1_final", "regret_curve")

FIGSIZE = (6.4, 4.4)
DPI = 150

_BAR_LABELS = {
    "linf_final": "final sup-norm estimation error",
    "l1_final": "final incentive distance to oracle (L1)",
}


class SchemaError(ValueError):
    """Input CSV does not match the documented schema; maps to exit 2."""


@dataclass(frozen=True)
class PlotSpec:
    csv_path: str
    metric: str
    out_path: str
    bounds_path: str | None = None


def read_rows(path) -> list[dict[str, str]]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise SchemaError(f"{path} is empty")
            rows = list(reader)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise SchemaError(f"{path} has a header but no rows")
    return rows


def require_columns(rows: list[dict[str, str]], needed, path) -> None:
    for col in needed:
        if col not in rows[0]:
            raise SchemaError(f"missing column '{col}' in {path}")


def group_stats(rows, metric):
    """Per-(n, T) mean and std of a metric over replicates, keys sorted.

    std uses the population convention, matching the harness aggregates.
    """
    groups: dict[tuple[int, int], list[float]] = {}
    for row in rows:
        try:
            key = (int(row["n"]), int(row["T"]))
            value = float(row[metric])
        except ValueError as exc:
            raise SchemaError(f"non-numeric cell in column '{metric}': {exc}")
        groups.setdefault(key, []).append(value)
    keys = sorted(groups)
    means = np.array([np.mean(groups[k]) for k in keys])
    stds = np.array([np.std(groups[k]) for k in keys])
    return keys, means, stds


def curve_stats(rows, path):
    """Time grid, mean curve, and std band from trace-style rows.

    Rows without a replicate column are treated as one replicate.  All
    replicates must cover the same time grid; a band is meaningless where
    only some of them have data.
    """
    has_rep = "replicate" in rows[0]
    series: dict[str, dict[int, float]] = {}
    for row in rows:
        rep = row["replicate"] if has_rep else "1"
        try:
            series.setdefault(rep, {})[int(row["t"])] = float(row["regret_cum"])
        except ValueError as exc:
            raise SchemaError(f"non-numeric cell in {path}: {exc}")
    grids = {rep: sorted(pts) for rep, pts in series.items()}
    grid = next(iter(grids.values()))
    for rep, other in grids.items():
        if other != grid:
            raise SchemaError(
                f"replicate {rep} in {path} covers a different time grid")
    ts = np.array(grid)
    matrix = np.array([[series[rep][t] for t in grid] for rep in sorted(series)])
    return ts, matrix.mean(axis=0), matrix.std(axis=0)


def _bar_figure(rows, metric, path):
    require_columns(rows, ("n", "T", "replicate", metric), path)
    keys, means, stds = group_stats(rows, metric)
    single_n = len({n for n, _ in keys}) == 1
    labels = [f"T={T}" if single_n else f"n={n}\nT={T}" for n, T in keys]
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    x = np.arange(len(keys))
    ax.bar(x, means, yerr=stds, capsize=4, color="#4878a8",
           edgecolor="black", linewidth=0.6)
    ax.set_xticks(x, labels)
    ax.set_ylabel(_BAR_LABELS[metric])
    ax.set_title(f"{metric} across horizons, mean and std over replicates")
    ax.margins(y=0.08)
    fig.tight_layout()
    return fig


def _curve_figure(rows, path, bounds_path):
    require_columns(rows, ("t", "regret_cum"), path)
    ts, mean, std = curve_stats(rows, path)
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    ax.plot(ts, mean, color="#4878a8", label="measured, mean over replicates")
    ax.fill_between(ts, mean - std, mean + std, color="#4878a8", alpha=0.25,
                    linewidth=0, label="std band")
    if bounds_path is not None:
        brows = read_rows(bounds_path)
        require_columns(brows, ("t", "regret_total"), bounds_path)
        bt = np.array([int(r["t"]) for r in brows])
        bv = np.array([float(r["regret_total"]) for r in brows])
        order = np.argsort(bt)
        ax.plot(bt[order], bv[order], color="#b05030", linestyle="--",
                label="theoretical bound")
        # the bound sits many orders of magnitude above the measurements;
        # a linear axis would flatten the measured curve to the floor
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("cumulative regret")
    ax.set_title("cumulative regret against the oracle")
    ax.legend(loc="upper left", frameon=False)
    fig.tight_layout()
    return fig


def render(spec: PlotSpec) -> Path:
    """Render one figure to spec.out_path; returns the written path."""
    if spec.metric not in METRICS:
        raise SchemaError(
            f"unknown metric '{spec.metric}'; choices: {', '.join(METRICS)}")
    out = Path(spec.out_path)
    if out.suffix.lower() != ".png":
        raise SchemaError(f"output must be a .png path, got '{out.name}'")
    if spec.bounds_path is not None and spec.metric != "regret_curve":
        raise SchemaError("a bounds overlay applies to regret_curve only")

    rows = read_rows(spec.csv_path)
    if spec.metric == "regret_curve":
        fig = _curve_figure(rows, spec.csv_path, spec.bounds_path)
    else:
        fig = _bar_figure(rows, spec.metric, spec.csv_path)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        # stripping the Software field keeps the bytes free of version text
        fig.savefig(out, format="png", metadata={"Software": None})
    finally:
        plt.close(fig)
    return out
