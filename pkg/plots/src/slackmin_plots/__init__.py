"""Figure rendering for the experiment CSV artifacts."""

from .render import METRICS, PlotSpec, SchemaError, curve_stats, group_stats, render

__version__ = "0.1.0"

__all__ = ["METRICS", "PlotSpec", "SchemaError", "curve_stats", "group_stats",
           "render"]
