"""Energy characterization of the parallel workload across the
voltage/frequency grid, and iso-performance savings against the
guardband envelope.

Iso-performance means equal frequency on the same workload (equal
wall-time), so savings at a frequency compare the cheapest error-free
operating point against the cheapest guardband-compliant one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .backend import Backend, derive_run_seed, make_request
from .constants import DEFAULT_WORKLOAD_SEED
from .errors import NoCommonFrequency, NoRecords
from .model import (
    GuardbandTable,
    OperatingPoint,
    energy,
    power,
    within_guardband,
)
from .workloads import (
    ParallelWorkloadSpec,
    PrngSpec,
    golden_value,
    workload_duration,
)

DEFAULT_ENERGY_FREQS_KHZ = tuple(range(80_000, 200_001, 2_000))

# Eight cluster cores plus the fabric controller orchestrating them.
DEFAULT_ENERGY_WORKLOAD = ParallelWorkloadSpec(n_cores=8, total_cycles=7_000_000)


@dataclass(frozen=True)
class EnergyRecord:
    op: OperatingPoint
    elapsed_s: float
    avg_power_w: float
    energy_j: float
    error_free: bool

    def __post_init__(self) -> None:
        if self.elapsed_s <= 0 or self.avg_power_w <= 0:
            raise ValueError("elapsed and power must be positive")
        if abs(self.energy_j - self.avg_power_w * self.elapsed_s) > 1e-12 * max(
            1.0, abs(self.energy_j)
        ):
            raise ValueError("energy_j must equal avg_power_w * elapsed_s")


@dataclass(frozen=True)
class SavingsRow:
    freq_khz: int
    baseline_voltage_mv: int
    baseline_energy_j: float
    candidate_voltage_mv: int
    candidate_energy_j: float
    savings: float


@dataclass(frozen=True)
class SavingsReport:
    rows: tuple[SavingsRow, ...]
    max_savings: float
    best_freq_khz: int


def energy_sweep(
    backend: Backend,
    workload: ParallelWorkloadSpec,
    voltages_mv: Sequence[int],
    freqs_khz: Sequence[int],
    campaign_seed: int = 0,
) -> list[EnergyRecord]:
    """One EnergyRecord per grid point, in (voltage, frequency) order.

    Power counts the workload's cluster cores plus the fabric
    controller.  error_free reflects one seeded outcome sample at the
    operating point: per-run failure odds depend only on (V, f), so a
    unit-size probe run through the backend decides it.
    """
    if not voltages_mv or not freqs_khz:
        raise NoRecords("energy sweep needs non-empty voltage and frequency grids")
    probe = PrngSpec(DEFAULT_WORKLOAD_SEED, 1)
    golden = golden_value(probe)
    records: list[EnergyRecord] = []
    for v in sorted(set(voltages_mv)):
        for f in sorted(set(freqs_khz)):
            op = OperatingPoint(v, f)
            req = make_request(backend.params, op, probe)
            rng_seed = derive_run_seed(campaign_seed, v, f, probe.n_items, 0)
            resp = backend.run(req, rng_seed)
            elapsed = workload_duration(workload, op)
            avg_power = power(backend.params, op, workload.n_cores + 1)
            records.append(
                EnergyRecord(
                    op=op,
                    elapsed_s=elapsed,
                    avg_power_w=avg_power,
                    energy_j=energy(avg_power, elapsed),
                    error_free=not resp.timed_out and resp.value == golden,
                )
            )
    _assert_monotone(records)
    return records


def _assert_monotone(records: Sequence[EnergyRecord]) -> None:
    """Model identity: at fixed V, energy strictly falls as f rises
    (static power amortizes); at fixed f, it strictly rises with V."""
    by_v: dict[int, list[EnergyRecord]] = {}
    by_f: dict[int, list[EnergyRecord]] = {}
    for r in records:
        by_v.setdefault(r.op.voltage_mv, []).append(r)
        by_f.setdefault(r.op.freq_khz, []).append(r)
    for group in by_v.values():
        group.sort(key=lambda r: r.op.freq_khz)
        for a, b in zip(group, group[1:]):
            assert b.energy_j < a.energy_j, (
                f"energy not decreasing in f at {a.op.voltage_mv} mV"
            )
    for group in by_f.values():
        group.sort(key=lambda r: r.op.voltage_mv)
        for a, b in zip(group, group[1:]):
            assert b.energy_j > a.energy_j, (
                f"energy not increasing in V at {a.op.freq_khz} kHz"
            )


def iso_performance_savings(
    records: Sequence[EnergyRecord], table: GuardbandTable
) -> SavingsReport:
    """Best achievable energy saving at unchanged performance.

    Per frequency: baseline is the cheapest guardband-compliant record,
    candidate the cheapest error-free record anywhere on the voltage
    axis; savings = 1 - candidate/baseline.  The report carries every
    comparable frequency and the maximum.
    """
    by_f: dict[int, list[EnergyRecord]] = {}
    for r in records:
        by_f.setdefault(r.op.freq_khz, []).append(r)
    rows: list[SavingsRow] = []
    for f in sorted(by_f):
        group = by_f[f]
        inside = [r for r in group if within_guardband(table, r.op)]
        clean = [r for r in group if r.error_free]
        if not inside or not clean:
            continue
        baseline = min(inside, key=lambda r: r.energy_j)
        candidate = min(clean, key=lambda r: r.energy_j)
        rows.append(
            SavingsRow(
                freq_khz=f,
                baseline_voltage_mv=baseline.op.voltage_mv,
                baseline_energy_j=baseline.energy_j,
                candidate_voltage_mv=candidate.op.voltage_mv,
                candidate_energy_j=candidate.energy_j,
                savings=1.0 - candidate.energy_j / baseline.energy_j,
            )
        )
    if not rows:
        raise NoCommonFrequency(
            "no frequency has both a guardband-compliant record and an "
            "error-free record"
        )
    best = max(rows, key=lambda r: r.savings)
    return SavingsReport(
        rows=tuple(rows), max_savings=best.savings, best_freq_khz=best.freq_khz
    )


def error_free_max_freq(
    records: Sequence[EnergyRecord], voltage_mv: int
) -> int | None:
    """Highest frequency at the voltage that is error-free with every
    lower grid frequency also error-free; None when the lowest grid
    point already fails."""
    at_v = sorted(
        (r for r in records if r.op.voltage_mv == voltage_mv),
        key=lambda r: r.op.freq_khz,
    )
    if not at_v:
        raise NoRecords(f"no energy records at {voltage_mv} mV")
    best: int | None = None
    for r in at_v:
        if not r.error_free:
            break
        best = r.op.freq_khz
    return best
