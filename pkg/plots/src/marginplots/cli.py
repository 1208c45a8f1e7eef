"""Command line: plot <kind> <input.csv> <output-image>."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import plot_energy_curves, plot_failure_distribution
from .readers import (
    FIGURE_KINDS,
    FigureSpec,
    SchemaMismatch,
    read_energy_csv,
    read_summary_csv,
)


def render(spec: FigureSpec) -> None:
    if spec.kind == "failure-distribution":
        plot_failure_distribution(read_summary_csv(spec.input_csv), spec.output_path)
    else:
        plot_energy_curves(read_energy_csv(spec.input_csv), spec.output_path)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render a campaign CSV as a figure (svg/pdf/png by extension)",
    )
    parser.add_argument("kind", choices=FIGURE_KINDS)
    parser.add_argument("input_csv", metavar="input.csv")
    parser.add_argument("output", metavar="output-image")
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(
            input_csv=Path(args.input_csv),
            kind=args.kind,
            output_path=Path(args.output),
        )
        render(spec)
    except SchemaMismatch as exc:
        print(f"error: {args.input_csv}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
