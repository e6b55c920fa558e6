"""plots command line: render figures from experiment CSVs."""

from __future__ import annotations

import argparse
import sys

from .render import METRICS, PlotSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render figures from experiment CSV output")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one metric to a PNG")
    p.add_argument("--csv", required=True, help="input CSV path")
    p.add_argument("--metric", required=True, choices=METRICS)
    p.add_argument("--out", required=True, help="output PNG path")
    p.add_argument("--bounds", default=None,
                   help="bounds CSV to overlay (regret_curve only)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(csv_path=args.csv, metric=args.metric,
                    out_path=args.out, bounds_path=args.bounds)
    try:
        out = render(spec)
    except SchemaError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
