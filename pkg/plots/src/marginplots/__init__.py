"""marginplots: static figures from marginlab campaign CSVs.

Consumes the summary and energy CSV files a campaign writes and renders
the two standard figures: per-voltage failure distributions against the
guardband line, and energy-vs-frequency curves per voltage. The package
talks to the campaign tool only through its CSV schemas; it never
imports it and never modifies an input file.
"""

from .figures import (
    build_energy_curves,
    build_failure_distribution,
    plot_energy_curves,
    plot_failure_distribution,
)
from .readers import (
    ENERGY_HEADER,
    SUMMARY_HEADER,
    EnergyPoint,
    FigureSpec,
    SchemaMismatch,
    SummaryRow,
    read_energy_csv,
    read_summary_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ENERGY_HEADER",
    "SUMMARY_HEADER",
    "EnergyPoint",
    "FigureSpec",
    "SchemaMismatch",
    "SummaryRow",
    "build_energy_curves",
    "build_failure_distribution",
    "plot_energy_curves",
    "plot_failure_distribution",
    "read_energy_csv",
    "read_summary_csv",
]
