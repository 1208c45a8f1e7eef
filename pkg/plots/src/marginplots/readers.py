"""Readers for the campaign CSV schemas.

The schemas are the plotting tool's only contract with the campaign
tool, so the expected headers are spelled out verbatim here and every
deviation is reported as SchemaMismatch with the offending line number.
Comment lines (leading '#', such as the provenance stamp) and blank
lines are skipped everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

QUANTILE_LEVELS = (5, 25, 50, 75, 95)

SUMMARY_HEADER = (
    "voltage_mv,n_records,first_error_khz,first_lockup_khz,"
    + ",".join(f"err_p{p}_khz" for p in QUANTILE_LEVELS)
    + ","
    + ",".join(f"lock_p{p}_khz" for p in QUANTILE_LEVELS)
    + ",cluster_guardband_khz"
)

ENERGY_HEADER = "voltage_mv,freq_khz,elapsed_s,avg_power_w,energy_j,error_free"

FIGURE_KINDS = ("failure-distribution", "energy-curves")


class SchemaMismatch(Exception):
    """The input file is not a readable campaign CSV of the expected kind."""


@dataclass(frozen=True)
class SummaryRow:
    """One voltage step of a failure summary.

    None in the first-onset fields or quantile dicts means that outcome
    kind was never observed at this voltage.
    """

    voltage_mv: int
    n_records: int
    first_error_khz: int | None
    first_lockup_khz: int | None
    error_quantiles_khz: dict[int, int] | None
    lockup_quantiles_khz: dict[int, int] | None
    cluster_guardband_khz: int


@dataclass(frozen=True)
class EnergyPoint:
    voltage_mv: int
    freq_khz: int
    elapsed_s: float
    avg_power_w: float
    energy_j: float
    error_free: bool


@dataclass(frozen=True)
class FigureSpec:
    """What to render: which file, as which figure, to where."""

    input_csv: Path
    kind: str
    output_path: Path

    def __post_init__(self) -> None:
        if self.kind not in FIGURE_KINDS:
            raise SchemaMismatch(
                f"unknown figure kind {self.kind!r}, expected one of {FIGURE_KINDS}"
            )
        if not Path(self.input_csv).is_file():
            raise SchemaMismatch(f"input {self.input_csv}: no such file")


def _data_lines(lines, expected_header: str, n_fields: int):
    """Yield (lineno, fields) for data rows, validating header and shape."""
    saw_header = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").strip()
        if not line or line.startswith("#"):
            continue
        if not saw_header:
            if line != expected_header:
                raise SchemaMismatch(
                    f"line {lineno}: expected header {expected_header!r}, "
                    f"got {line!r}"
                )
            saw_header = True
            continue
        fields = line.split(",")
        if len(fields) != n_fields:
            raise SchemaMismatch(
                f"line {lineno}: expected {n_fields} fields, got {len(fields)}"
            )
        yield lineno, fields
    if not saw_header:
        raise SchemaMismatch("no header row found")


def _int_cell(value: str, lineno: int, column: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise SchemaMismatch(
            f"line {lineno}: column {column}: expected an integer, got {value!r}"
        ) from None


def _float_cell(value: str, lineno: int, column: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise SchemaMismatch(
            f"line {lineno}: column {column}: expected a number, got {value!r}"
        ) from None


def _optional_int(value: str, lineno: int, column: str) -> int | None:
    return None if value == "" else _int_cell(value, lineno, column)


def _quantiles(fields, lineno: int, prefix: str) -> dict[int, int] | None:
    cells = {
        level: _optional_int(value, lineno, f"{prefix}_p{level}_khz")
        for level, value in zip(QUANTILE_LEVELS, fields)
    }
    present = {level: v for level, v in cells.items() if v is not None}
    if not present:
        return None
    if len(present) != len(QUANTILE_LEVELS):
        raise SchemaMismatch(
            f"line {lineno}: {prefix} quantiles are partially empty"
        )
    return present


def read_summary_csv(path) -> list[SummaryRow]:
    rows = []
    with open(path, newline="") as stream:
        for lineno, fields in _data_lines(stream, SUMMARY_HEADER, 15):
            rows.append(
                SummaryRow(
                    voltage_mv=_int_cell(fields[0], lineno, "voltage_mv"),
                    n_records=_int_cell(fields[1], lineno, "n_records"),
                    first_error_khz=_optional_int(
                        fields[2], lineno, "first_error_khz"
                    ),
                    first_lockup_khz=_optional_int(
                        fields[3], lineno, "first_lockup_khz"
                    ),
                    error_quantiles_khz=_quantiles(fields[4:9], lineno, "err"),
                    lockup_quantiles_khz=_quantiles(fields[9:14], lineno, "lock"),
                    cluster_guardband_khz=_int_cell(
                        fields[14], lineno, "cluster_guardband_khz"
                    ),
                )
            )
    return rows


def read_energy_csv(path) -> list[EnergyPoint]:
    points = []
    with open(path, newline="") as stream:
        for lineno, fields in _data_lines(stream, ENERGY_HEADER, 6):
            flag = fields[5]
            if flag not in ("true", "false"):
                raise SchemaMismatch(
                    f"line {lineno}: column error_free: expected true/false, "
                    f"got {flag!r}"
                )
            points.append(
                EnergyPoint(
                    voltage_mv=_int_cell(fields[0], lineno, "voltage_mv"),
                    freq_khz=_int_cell(fields[1], lineno, "freq_khz"),
                    elapsed_s=_float_cell(fields[2], lineno, "elapsed_s"),
                    avg_power_w=_float_cell(fields[3], lineno, "avg_power_w"),
                    energy_j=_float_cell(fields[4], lineno, "energy_j"),
                    error_free=(flag == "true"),
                )
            )
    return points
