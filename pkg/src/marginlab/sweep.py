"""Shmoo campaign: enumerate a voltage/frequency/size grid, run the
self-checking workload at every point, classify outcomes, and summarize
where errors and lockups start.

The frequency axis begins at the guardband region and climbs in fixed
steps.  Two stop rules exist: StopOnFirstLockup mirrors a bench campaign
where a hung chip ends that voltage's sweep (open-ended axis), while
FixedCeiling bounds the grid for CI runs and keeps sweeping after
lockups (the simulated device is always resettable).
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator, Sequence

import numpy as np

from .backend import Backend, derive_run_seed, make_request
from .constants import DEFAULT_WORKLOAD_SEED
from .errors import (
    BackendFailure,
    EmptyPlan,
    InsufficientData,
    NoFailuresObserved,
    NoRecords,
)
from .model import SUPPLY_STEPS_MV, OperatingPoint
from .workloads import GoldenCache, PrngSpec, golden_cache, golden_value

QUANTILE_LEVELS = (5, 25, 50, 75, 95)

# Safety valve for open-ended sweeps driven by a model that never locks
# up: stop rather than spin forever.  Far above any plausible onset.
_SAFETY_CEILING_KHZ = 2_000_000

DEFAULT_SIZES = tuple(range(50_000, 1_000_001, 50_000))


class Outcome(Enum):
    CORRECT = "correct"
    ERROR = "error"
    LOCKUP = "lockup"


@dataclass(frozen=True)
class StopOnFirstLockup:
    """End a voltage's frequency sweep at its first lockup."""


@dataclass(frozen=True)
class FixedCeiling:
    """Sweep every frequency up to and including max_freq_khz."""

    max_freq_khz: int

    def __post_init__(self) -> None:
        if self.max_freq_khz < 1:
            raise EmptyPlan(f"ceiling must be positive, got {self.max_freq_khz}")


StopRule = StopOnFirstLockup | FixedCeiling


@dataclass(frozen=True)
class SweepPlan:
    voltages_mv: tuple[int, ...]
    start_freq_khz: int = 200_000
    freq_step_khz: int = 2_000
    sizes: tuple[int, ...] = DEFAULT_SIZES
    repetitions: int = 10
    stop_rule: StopRule = field(default_factory=StopOnFirstLockup)

    def __post_init__(self) -> None:
        object.__setattr__(self, "voltages_mv", tuple(self.voltages_mv))
        object.__setattr__(self, "sizes", tuple(self.sizes))
        if not self.voltages_mv:
            raise EmptyPlan("no voltages in plan")
        if not self.sizes:
            raise EmptyPlan("no workload sizes in plan")
        for v in self.voltages_mv:
            if v not in SUPPLY_STEPS_MV:
                raise EmptyPlan(
                    f"voltage {v} mV is not a supply step {SUPPLY_STEPS_MV}"
                )
        if any(n < 1 for n in self.sizes):
            raise EmptyPlan("workload sizes must be positive")
        if self.start_freq_khz < 1:
            raise EmptyPlan("start frequency must be positive")
        if self.freq_step_khz < 1:
            raise EmptyPlan("frequency step must be positive")
        if self.repetitions < 1:
            raise EmptyPlan("repetitions must be >= 1")


@dataclass(frozen=True)
class TestRecord:
    __test__ = False  # not a pytest class, despite the name

    op: OperatingPoint
    n_items: int
    repetition_index: int
    outcome: Outcome
    elapsed_s: float
    energy_j: float

    def __post_init__(self) -> None:
        if self.elapsed_s < 0 or self.energy_j < 0:
            raise ValueError("elapsed and energy must be non-negative")


@dataclass(frozen=True)
class VoltageFailureStats:
    """Failure-onset statistics for one supply step.

    None marks an outcome kind never observed at this voltage; the
    quantile dict maps level (percent) to frequency in kHz.
    """

    voltage_mv: int
    n_records: int
    first_error_khz: int | None
    first_lockup_khz: int | None
    error_quantiles_khz: dict[int, int] | None
    lockup_quantiles_khz: dict[int, int] | None

    def __post_init__(self) -> None:
        for q in (self.error_quantiles_khz, self.lockup_quantiles_khz):
            if q is None:
                continue
            vals = [q[p] for p in sorted(q)]
            if any(b < a for a, b in zip(vals, vals[1:])):
                raise ValueError(f"quantiles must be non-decreasing, got {q}")


@dataclass(frozen=True)
class FailureSummary:
    rows: tuple[VoltageFailureStats, ...]

    def row(self, voltage_mv: int) -> VoltageFailureStats:
        for r in self.rows:
            if r.voltage_mv == voltage_mv:
                return r
        raise KeyError(f"no summary row for {voltage_mv} mV")


def _frequencies(plan: SweepPlan) -> Iterator[int]:
    f = plan.start_freq_khz
    ceiling = (
        plan.stop_rule.max_freq_khz
        if isinstance(plan.stop_rule, FixedCeiling)
        else _SAFETY_CEILING_KHZ
    )
    while f <= ceiling:
        yield f
        f += plan.freq_step_khz


def enumerate_plan(plan: SweepPlan) -> Iterator[tuple[int, int, int, int]]:
    """Points in lexicographic (voltage, frequency, size, repetition) order.

    Under FixedCeiling the iterator is finite (materialize with list());
    under StopOnFirstLockup the frequency axis has no a-priori end, so
    the iterator runs until the safety ceiling and execution truncates
    it at the first lockup.
    """
    if isinstance(plan.stop_rule, FixedCeiling):
        if plan.stop_rule.max_freq_khz < plan.start_freq_khz:
            raise EmptyPlan("frequency ceiling below start frequency")

    def points() -> Iterator[tuple[int, int, int, int]]:
        for v in plan.voltages_mv:
            for f in _frequencies(plan):
                for n in plan.sizes:
                    for rep in range(plan.repetitions):
                        yield (v, f, n, rep)

    return points()


def _classify(resp, op: OperatingPoint, spec: PrngSpec, n: int, rep: int,
              cache: GoldenCache) -> TestRecord:
    if resp.timed_out:
        outcome = Outcome.LOCKUP
    elif resp.value == golden_value(spec, cache):
        outcome = Outcome.CORRECT
    else:
        outcome = Outcome.ERROR
    return TestRecord(
        op=op,
        n_items=n,
        repetition_index=rep,
        outcome=outcome,
        elapsed_s=resp.elapsed_s,
        energy_j=resp.avg_power_w * resp.elapsed_s,
    )


def _run_voltage(
    backend: Backend,
    plan: SweepPlan,
    voltage_mv: int,
    campaign_seed: int,
    workload_seed: int,
    cache: GoldenCache,
) -> tuple[list[TestRecord], BackendFailure | None]:
    records: list[TestRecord] = []
    stop_voltage = isinstance(plan.stop_rule, StopOnFirstLockup)
    try:
        for freq in _frequencies(plan):
            op = OperatingPoint(voltage_mv, freq)
            for n in plan.sizes:
                spec = PrngSpec(workload_seed, n)
                req = make_request(backend.params, op, spec)
                for rep in range(plan.repetitions):
                    rng_seed = derive_run_seed(
                        campaign_seed, voltage_mv, freq, n, rep
                    )
                    rec = _classify(
                        backend.run(req, rng_seed), op, spec, n, rep, cache
                    )
                    records.append(rec)
                    if stop_voltage and rec.outcome is Outcome.LOCKUP:
                        return records, None
    except BackendFailure as exc:
        return records, exc
    return records, None


def execute_plan(
    backend: Backend,
    plan: SweepPlan,
    campaign_seed: int,
    *,
    workload_seed: int = DEFAULT_WORKLOAD_SEED,
    sink: Callable[[TestRecord], None] | None = None,
    workers: int = 1,
) -> list[TestRecord]:
    """Run every plan point through the backend and classify outcomes.

    Voltages are independent and may run in parallel (workers > 1); the
    frequency axis within a voltage is strictly sequential because the
    stop rule depends on earlier outcomes.  Records reach the sink, and
    the returned list, in canonical plan order regardless of worker
    count.  A BackendFailure aborts the campaign after flushing every
    record from voltages up to and including the failed one.
    """
    cache = golden_cache()
    args = [
        (backend, plan, v, campaign_seed, workload_seed, cache)
        for v in plan.voltages_mv
    ]
    if workers <= 1 or len(args) == 1:
        results = [_run_voltage(*a) for a in args]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_voltage, *a) for a in args]
            results = [f.result() for f in futures]
    out: list[TestRecord] = []
    for records, exc in results:
        out.extend(records)
        if sink is not None:
            for rec in records:
                sink(rec)
        if exc is not None:
            raise BackendFailure(
                f"campaign aborted with {len(out)} records flushed"
            ) from exc
    return out


def _nearest_rank(sorted_vals: Sequence[int], level: int) -> int:
    rank = max(1, math.ceil(level * len(sorted_vals) / 100))
    return sorted_vals[rank - 1]


def _stats_for(voltage_mv: int, records: list[TestRecord]) -> VoltageFailureStats:
    def side(outcome: Outcome) -> tuple[int | None, dict[int, int] | None]:
        freqs = sorted(
            r.op.freq_khz for r in records if r.outcome is outcome
        )
        if not freqs:
            return None, None
        return freqs[0], {p: _nearest_rank(freqs, p) for p in QUANTILE_LEVELS}

    first_err, err_q = side(Outcome.ERROR)
    first_lock, lock_q = side(Outcome.LOCKUP)
    return VoltageFailureStats(
        voltage_mv=voltage_mv,
        n_records=len(records),
        first_error_khz=first_err,
        first_lockup_khz=first_lock,
        error_quantiles_khz=err_q,
        lockup_quantiles_khz=lock_q,
    )


def summarize(records: Sequence[TestRecord]) -> FailureSummary:
    """Per-voltage first-occurrence frequencies and nearest-rank
    quantiles over the frequencies at which each failure kind occurred.

    A voltage where a kind never occurred gets None markers; if no
    record anywhere failed, raises NoFailuresObserved.
    """
    if not records:
        raise NoRecords("cannot summarize zero records")
    by_voltage: dict[int, list[TestRecord]] = {}
    for r in records:
        by_voltage.setdefault(r.op.voltage_mv, []).append(r)
    rows = tuple(
        _stats_for(v, by_voltage[v]) for v in sorted(by_voltage)
    )
    if all(
        row.first_error_khz is None and row.first_lockup_khz is None
        for row in rows
    ):
        raise NoFailuresObserved("no error or lockup in any record")
    return FailureSummary(rows=rows)


def size_independence_test(
    records: Sequence[TestRecord],
    *,
    min_sizes: int = 5,
    threshold: float = 0.05,
) -> tuple[float, bool]:
    """Least-squares slope of per-size error rate against size, restricted
    to operating points where at least one error occurred, and the verdict
    |slope * size_range| < threshold.

    Lockup runs return no value and are excluded from rate denominators.
    """
    error_points = {
        (r.op.voltage_mv, r.op.freq_khz)
        for r in records
        if r.outcome is Outcome.ERROR
    }
    if not error_points:
        raise InsufficientData("no error records to regress on")
    totals: Counter[int] = Counter()
    errors: Counter[int] = Counter()
    for r in records:
        if (r.op.voltage_mv, r.op.freq_khz) not in error_points:
            continue
        if r.outcome is Outcome.LOCKUP:
            continue
        totals[r.n_items] += 1
        if r.outcome is Outcome.ERROR:
            errors[r.n_items] += 1
    sizes = sorted(totals)
    if len(sizes) < min_sizes:
        raise InsufficientData(
            f"need >= {min_sizes} sizes with data at error frequencies, "
            f"got {len(sizes)}"
        )
    rates = np.array([errors[n] / totals[n] for n in sizes], dtype=float)
    slope = float(np.polyfit(np.array(sizes, dtype=float), rates, 1)[0])
    size_range = sizes[-1] - sizes[0]
    return slope, abs(slope * size_range) < threshold
