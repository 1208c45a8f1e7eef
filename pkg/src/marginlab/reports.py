"""Campaign outputs: provenance-stamped CSV files and text reports.

Every CSV starts with one comment line recording the tool version, a
hash of the effective configuration, and the campaign seed, then a
header row.  Nothing time-dependent is written, so rerunning a command
with the same inputs reproduces each file byte for byte.

Floats are serialized with repr(), the shortest digit string that
round-trips the IEEE-754 value.
"""

from __future__ import annotations

import hashlib
import json
from typing import Iterable, Sequence, TextIO

from .calibration import CalibrationTargets, achieved_savings
from .constants import TOOL_VERSION
from .controller import EpisodeReport, WindowTrace
from .energy import EnergyRecord, SavingsReport
from .errors import NoRecords
from .model import (
    ClockDomain,
    DeviceModelParams,
    GuardbandTable,
    OperatingPoint,
    guardband_max_freq,
    onset_frequencies,
    power,
)
from .sweep import FailureSummary, Outcome, TestRecord, QUANTILE_LEVELS

RECORDS_HEADER = "voltage_mv,freq_khz,n_items,rep,outcome,elapsed_s,energy_j"
ENERGY_HEADER = "voltage_mv,freq_khz,elapsed_s,avg_power_w,energy_j,error_free"
SUMMARY_HEADER = (
    "voltage_mv,n_records,first_error_khz,first_lockup_khz,"
    + ",".join(f"err_p{p}_khz" for p in QUANTILE_LEVELS)
    + ","
    + ",".join(f"lock_p{p}_khz" for p in QUANTILE_LEVELS)
    + ",cluster_guardband_khz"
)
SAVINGS_HEADER = (
    "freq_khz,baseline_voltage_mv,baseline_energy_j,"
    "candidate_voltage_mv,candidate_energy_j,savings"
)
EPISODE_HEADER = (
    "episode,settled_voltage_mv,settled_rate,overhead,lockup_events,"
    "total_energy_j,baseline_energy_j,net_savings,baseline_within_guardband"
)
TRACE_HEADER = (
    "window,voltage_mv,error_count,lockup_count,rate,action,status,"
    "duration_s,energy_j"
)


def config_hash(config_data: object) -> str:
    """Short stable digest of a JSON-representable config tree."""
    canonical = json.dumps(config_data, sort_keys=True, separators=(",", ":"))
    return hashlib.blake2b(canonical.encode(), digest_size=6).hexdigest()


def provenance_line(config_digest: str, campaign_seed: int) -> str:
    return f"# marginlab {TOOL_VERSION} config={config_digest} seed={campaign_seed}"


def _fmt(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


class RecordCsvWriter:
    """Streaming sink for sweep records; one line per record as it lands."""

    def __init__(self, stream: TextIO, provenance: str):
        self._stream = stream
        stream.write(provenance + "\n")
        stream.write(RECORDS_HEADER + "\n")

    def __call__(self, rec: TestRecord) -> None:
        self._stream.write(
            f"{rec.op.voltage_mv},{rec.op.freq_khz},{rec.n_items},"
            f"{rec.repetition_index},{rec.outcome.value},"
            f"{_fmt(rec.elapsed_s)},{_fmt(rec.energy_j)}\n"
        )
        self._stream.flush()


def write_records_csv(
    stream: TextIO, records: Iterable[TestRecord], provenance: str
) -> None:
    sink = RecordCsvWriter(stream, provenance)
    for rec in records:
        sink(rec)


def read_records_csv(stream: TextIO) -> list[TestRecord]:
    records: list[TestRecord] = []
    header_seen = False
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if line != RECORDS_HEADER:
                raise ValueError(
                    f"line {lineno}: expected header {RECORDS_HEADER!r}"
                )
            header_seen = True
            continue
        v, f, n, rep, outcome, elapsed, energy = line.split(",")
        records.append(
            TestRecord(
                op=OperatingPoint(int(v), int(f)),
                n_items=int(n),
                repetition_index=int(rep),
                outcome=Outcome(outcome),
                elapsed_s=float(elapsed),
                energy_j=float(energy),
            )
        )
    if not header_seen:
        raise NoRecords("records CSV has no header row")
    return records


def write_summary_csv(
    stream: TextIO,
    summary: FailureSummary,
    table: GuardbandTable,
    provenance: str,
) -> None:
    """Per-voltage onset summary; the guardband column lets downstream
    figure tools draw the reference line without model access."""
    stream.write(provenance + "\n")
    stream.write(SUMMARY_HEADER + "\n")
    for row in summary.rows:
        err_q = row.error_quantiles_khz or {}
        lock_q = row.lockup_quantiles_khz or {}
        cells = [
            row.voltage_mv,
            row.n_records,
            row.first_error_khz,
            row.first_lockup_khz,
            *[err_q.get(p) for p in QUANTILE_LEVELS],
            *[lock_q.get(p) for p in QUANTILE_LEVELS],
            guardband_max_freq(table, row.voltage_mv, ClockDomain.CLUSTER),
        ]
        stream.write(",".join(_fmt(c) for c in cells) + "\n")


def write_energy_csv(
    stream: TextIO, records: Sequence[EnergyRecord], provenance: str
) -> None:
    stream.write(provenance + "\n")
    stream.write(ENERGY_HEADER + "\n")
    for r in records:
        stream.write(
            f"{r.op.voltage_mv},{r.op.freq_khz},{_fmt(r.elapsed_s)},"
            f"{_fmt(r.avg_power_w)},{_fmt(r.energy_j)},{_fmt(r.error_free)}\n"
        )


def read_energy_csv(stream: TextIO) -> list[EnergyRecord]:
    records: list[EnergyRecord] = []
    header_seen = False
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if line != ENERGY_HEADER:
                raise ValueError(f"line {lineno}: expected header {ENERGY_HEADER!r}")
            header_seen = True
            continue
        v, f, elapsed, avg_power, energy, ok = line.split(",")
        records.append(
            EnergyRecord(
                op=OperatingPoint(int(v), int(f)),
                elapsed_s=float(elapsed),
                avg_power_w=float(avg_power),
                energy_j=float(energy),
                error_free={"true": True, "false": False}[ok],
            )
        )
    if not header_seen:
        raise NoRecords("energy CSV has no header row")
    return records


def write_savings_csv(
    stream: TextIO, report: SavingsReport, provenance: str
) -> None:
    stream.write(provenance + "\n")
    stream.write(SAVINGS_HEADER + "\n")
    for row in report.rows:
        stream.write(
            f"{row.freq_khz},{row.baseline_voltage_mv},"
            f"{_fmt(row.baseline_energy_j)},{row.candidate_voltage_mv},"
            f"{_fmt(row.candidate_energy_j)},{_fmt(row.savings)}\n"
        )


def savings_report_text(report: SavingsReport) -> str:
    lines = [
        "Iso-performance energy savings vs the guardband envelope",
        f"  comparable frequencies: {len(report.rows)}",
        f"  maximum savings: {report.max_savings:.2%} "
        f"at {report.best_freq_khz / 1000:.0f} MHz",
    ]
    best = next(r for r in report.rows if r.freq_khz == report.best_freq_khz)
    lines.append(
        f"  achieved by running {best.candidate_voltage_mv} mV instead of "
        f"{best.baseline_voltage_mv} mV at equal frequency"
    )
    return "\n".join(lines) + "\n"


def write_episode_csv(
    stream: TextIO, reports: Sequence[EpisodeReport], provenance: str
) -> None:
    stream.write(provenance + "\n")
    stream.write(EPISODE_HEADER + "\n")
    for i, rep in enumerate(reports):
        cells = [
            i,
            rep.settled_voltage_mv,
            rep.settled_rate,
            rep.overhead,
            rep.lockup_events,
            rep.total_energy_j,
            rep.baseline_energy_j,
            rep.net_savings,
            rep.baseline_within_guardband,
        ]
        stream.write(",".join(_fmt(c) for c in cells) + "\n")


def write_trace_csv(
    stream: TextIO, trace: Sequence[WindowTrace], provenance: str
) -> None:
    stream.write(provenance + "\n")
    stream.write(TRACE_HEADER + "\n")
    for w in trace:
        cells = [
            w.index,
            w.voltage_mv,
            w.error_count,
            w.lockup_count,
            w.rate,
            w.action.value,
            w.status.value,
            w.duration_s,
            w.energy_j,
        ]
        stream.write(",".join(_fmt(c) for c in cells) + "\n")


def episode_summary_text(reports: Sequence[EpisodeReport]) -> str:
    n = len(reports)
    settled = [r for r in reports if r.settled_voltage_mv is not None]
    lockups = sum(r.lockup_events for r in reports)
    worst_overhead = max(r.overhead for r in reports)
    lines = [
        f"Controller episodes: {n}",
        f"  settled: {len(settled)}/{n}",
        f"  total lockup events: {lockups}",
        f"  worst recovery overhead: {worst_overhead:.3%}",
    ]
    if settled:
        voltages = sorted({r.settled_voltage_mv for r in settled})
        mean_savings = sum(r.net_savings for r in settled) / len(settled)
        lines.append(f"  settled voltages: {voltages} mV")
        lines.append(f"  mean net savings vs guardband baseline: {mean_savings:.2%}")
    return "\n".join(lines) + "\n"


def calibration_report_text(
    params: DeviceModelParams,
    targets: CalibrationTargets,
    table: GuardbandTable,
) -> str:
    """Human-readable fit summary: per-step onsets against their targets,
    the fitted constants, and the achieved savings figure."""
    lines = [
        "Calibrated device model",
        f"  onset law: f(V) = k (V - v_th)^alpha / V,  "
        f"v_th = {params.v_th_mv:.4f} mV, alpha = {params.alpha:.6f}, "
        f"k = {params.k_err:.4f}",
        f"  logistic widths: error {params.w_err_khz:.0f} kHz, "
        f"lockup {params.w_lock_khz:.0f} kHz",
        f"  power: c_eff = {params.c_eff:.4e} F/core, "
        f"p_static = {params.p_static_coeff:.8f} W/V",
        "",
        "  voltage  guardband  target-mult  error-onset  lockup-onset",
    ]
    for v in sorted(r[0] for r in table.rows):
        gb = guardband_max_freq(table, v, ClockDomain.CLUSTER)
        onsets = onset_frequencies(params, v)
        lines.append(
            f"  {v:7d}  {gb / 1000:6.0f} MHz  {targets.multiplier(v):11.3f}"
            f"  {onsets.f_err_onset_khz / 1000:7.3f} MHz"
            f"  {onsets.f_lock_onset_khz / 1000:8.3f} MHz"
        )
    op = OperatingPoint(1000, 200_000)
    savings = achieved_savings(params, targets, table)
    lines += [
        "",
        f"  modeled power at 1.0 V / 200 MHz / 8+1 cores: "
        f"{power(params, op, 9):.6f} W",
        f"  iso-performance savings at "
        f"{targets.reference_freq_khz / 1000:.0f} MHz: {savings:.2%}",
    ]
    return "\n".join(lines) + "\n"
