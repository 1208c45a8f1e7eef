"""Tests for sweep planning, execution, failure summaries, and the
size-independence check."""

import io

import pytest

from marginlab import (
    DEFAULT_SIZES,
    BackendFailure,
    EmptyPlan,
    FixedCeiling,
    InsufficientData,
    NoFailuresObserved,
    NoRecords,
    OperatingPoint,
    Outcome,
    OutcomeProbabilities,
    SimulatedBackend,
    model_probabilities,
    StopOnFirstLockup,
    SweepPlan,
    TestRecord,
    VoltageFailureStats,
    enumerate_plan,
    execute_plan,
    size_independence_test,
    summarize,
)


def never_fail(params, op, n_items):
    return OutcomeProbabilities(p_error=0.0, p_lockup=0.0)


def lock_at_or_above(threshold_khz):
    def fn(params, op, n_items):
        locked = 1.0 if op.freq_khz >= threshold_khz else 0.0
        return OutcomeProbabilities(p_error=0.0, p_lockup=locked)
    return fn


def error_record(freq_khz, voltage_mv=1000, n_items=100, rep=0, outcome=Outcome.ERROR):
    return TestRecord(
        op=OperatingPoint(voltage_mv, freq_khz),
        n_items=n_items,
        repetition_index=rep,
        outcome=outcome,
        elapsed_s=0.1,
        energy_j=0.01,
    )


class TestPlanValidation:
    def test_defaults(self):
        plan = SweepPlan(voltages_mv=(1000,))
        assert plan.start_freq_khz == 200_000
        assert plan.freq_step_khz == 2_000
        assert plan.repetitions == 10
        assert plan.sizes == DEFAULT_SIZES
        assert isinstance(plan.stop_rule, StopOnFirstLockup)

    def test_default_sizes_span(self):
        assert len(DEFAULT_SIZES) == 20
        assert DEFAULT_SIZES[0] == 50_000
        assert DEFAULT_SIZES[-1] == 1_000_000

    def test_lists_are_coerced(self):
        plan = SweepPlan(voltages_mv=[1000, 1100], sizes=[10, 20])
        assert plan.voltages_mv == (1000, 1100)
        assert plan.sizes == (10, 20)

    @pytest.mark.parametrize("kwargs", [
        dict(voltages_mv=()),
        dict(voltages_mv=(1000,), sizes=()),
        dict(voltages_mv=(1025,)),
        dict(voltages_mv=(1000,), sizes=(0,)),
        dict(voltages_mv=(1000,), start_freq_khz=0),
        dict(voltages_mv=(1000,), freq_step_khz=0),
        dict(voltages_mv=(1000,), repetitions=0),
    ])
    def test_degenerate_plans_rejected(self, kwargs):
        with pytest.raises(EmptyPlan):
            SweepPlan(**kwargs)

    def test_zero_ceiling_rejected(self):
        with pytest.raises(EmptyPlan):
            FixedCeiling(0)


class TestEnumeration:
    def test_lexicographic_order_and_count(self):
        plan = SweepPlan(
            voltages_mv=(1000,),
            stop_rule=FixedCeiling(204_000),
        )
        points = list(enumerate_plan(plan))
        # 3 frequencies x 20 sizes x 10 repetitions.
        assert len(points) == 600
        assert points[0] == (1000, 200_000, 50_000, 0)
        assert points[9] == (1000, 200_000, 50_000, 9)
        assert points[10] == (1000, 200_000, 100_000, 0)
        assert points[-1] == (1000, 204_000, 1_000_000, 9)
        assert points == sorted(points)

    def test_seventh_frequency(self):
        plan = SweepPlan(voltages_mv=(1000,), stop_rule=FixedCeiling(240_000))
        freqs = sorted({p[1] for p in enumerate_plan(plan)})
        assert freqs[6] == 212_000

    def test_ceiling_below_start_rejected(self):
        plan = SweepPlan(voltages_mv=(1000,), stop_rule=FixedCeiling(150_000))
        with pytest.raises(EmptyPlan):
            enumerate_plan(plan)


class TestExecution:
    def test_failure_free_model_covers_whole_grid(self, params, cache):
        backend = SimulatedBackend(params, probability_fn=never_fail, cache=cache)
        plan = SweepPlan(
            voltages_mv=(1000, 1200),
            sizes=(500, 600),
            repetitions=2,
            stop_rule=FixedCeiling(208_000),
        )
        records = execute_plan(backend, plan, campaign_seed=1)
        assert len(records) == 2 * 5 * 2 * 2
        assert all(r.outcome is Outcome.CORRECT for r in records)
        with pytest.raises(NoFailuresObserved):
            summarize(records)

    def test_stop_on_first_lockup_truncates_voltage(self, params, cache):
        backend = SimulatedBackend(
            params, probability_fn=lock_at_or_above(220_000), cache=cache
        )
        plan = SweepPlan(voltages_mv=(1000,), sizes=(100, 200), repetitions=2)
        records = execute_plan(backend, plan, campaign_seed=1)
        # Ten clean frequencies (200..218 MHz) then one lockup record.
        assert len(records) == 10 * 2 * 2 + 1
        assert records[-1].outcome is Outcome.LOCKUP
        assert records[-1].op.freq_khz == 220_000
        assert max(r.op.freq_khz for r in records) == 220_000

    def test_first_error_location(self, backend):
        plan = SweepPlan(
            voltages_mv=(1000,),
            sizes=(1000, 2000),
            repetitions=3,
            stop_rule=FixedCeiling(224_000),
        )
        records = execute_plan(backend, plan, campaign_seed=1)
        stats = summarize(records).row(1000)
        assert stats.first_error_khz is not None
        assert abs(stats.first_error_khz - 217_500) <= 6_000

    def test_record_timing_and_energy(self, params, backend):
        from marginlab import power

        plan = SweepPlan(
            voltages_mv=(1000,),
            sizes=(1000,),
            repetitions=1,
            stop_rule=FixedCeiling(200_000),
        )
        rec = execute_plan(backend, plan, campaign_seed=1)[0]
        duration = 1000 * params.cycles_per_item / 200_000_000.0
        level = power(params, rec.op, 2)
        assert rec.elapsed_s == pytest.approx(duration)
        assert rec.energy_j == pytest.approx(level * duration)

    def test_lockup_records_charge_the_timeout(self, params, cache):
        backend = SimulatedBackend(
            params, probability_fn=lock_at_or_above(0), cache=cache
        )
        plan = SweepPlan(voltages_mv=(1000,), sizes=(1000,), repetitions=1)
        rec = execute_plan(backend, plan, campaign_seed=1)[0]
        assert rec.outcome is Outcome.LOCKUP
        duration = 1000 * params.cycles_per_item / 200_000_000.0
        assert rec.elapsed_s == pytest.approx(3.0 * duration)

    def test_replayable_across_worker_counts(self, params, cache):
        plan = SweepPlan(
            voltages_mv=(1000, 1100, 1200),
            sizes=(500, 1500),
            repetitions=2,
            stop_rule=FixedCeiling(230_000),
        )
        runs = []
        for workers in (1, 3):
            backend = SimulatedBackend(params, cache=cache)
            sunk = []
            records = execute_plan(
                backend, plan, campaign_seed=9, sink=sunk.append, workers=workers
            )
            assert sunk == records
            runs.append(records)
        assert runs[0] == runs[1]

    def test_backend_failure_flushes_prefix(self, params, cache):
        inner = SimulatedBackend(params, probability_fn=never_fail, cache=cache)

        class Flaky:
            params = inner.params

            def run(self, req, rng_seed):
                if req.op.voltage_mv == 1100:
                    raise BackendFailure("link dropped")
                return inner.run(req, rng_seed)

        plan = SweepPlan(
            voltages_mv=(1000, 1100, 1200),
            sizes=(100,),
            repetitions=1,
            stop_rule=FixedCeiling(204_000),
        )
        sunk = []
        with pytest.raises(BackendFailure):
            execute_plan(Flaky(), plan, campaign_seed=1, sink=sunk.append)
        # All of 1000 mV (3 frequencies) flushed, nothing from 1100 on.
        assert [r.op.voltage_mv for r in sunk] == [1000, 1000, 1000]


class TestSummarize:
    def test_no_records(self):
        with pytest.raises(NoRecords):
            summarize([])

    def test_single_error_collapses_quantiles(self):
        records = [
            error_record(220_000, outcome=Outcome.CORRECT),
            error_record(230_000),
        ]
        stats = summarize(records).row(1000)
        assert stats.first_error_khz == 230_000
        assert stats.error_quantiles_khz == {5: 230_000, 25: 230_000, 50: 230_000,
                                             75: 230_000, 95: 230_000}
        assert stats.first_lockup_khz is None
        assert stats.lockup_quantiles_khz is None

    def test_nearest_rank_median_of_three(self):
        records = [error_record(f) for f in (228_000, 220_000, 224_000)]
        q = summarize(records).row(1000).error_quantiles_khz
        assert q[50] == 224_000
        assert q[5] == 220_000
        assert q[95] == 228_000

    def test_per_voltage_split(self):
        records = [
            error_record(220_000, voltage_mv=1000),
            error_record(300_000, voltage_mv=1200, outcome=Outcome.LOCKUP),
        ]
        summary = summarize(records)
        assert summary.row(1000).first_error_khz == 220_000
        assert summary.row(1000).first_lockup_khz is None
        assert summary.row(1200).first_lockup_khz == 300_000
        assert summary.row(1200).first_error_khz is None

    def test_first_is_minimum_not_chronological(self):
        records = [error_record(226_000), error_record(222_000)]
        assert summarize(records).row(1000).first_error_khz == 222_000

    def test_quantile_monotonicity_enforced(self):
        with pytest.raises(ValueError):
            VoltageFailureStats(
                voltage_mv=1000,
                n_records=5,
                first_error_khz=220_000,
                first_lockup_khz=None,
                error_quantiles_khz={5: 230_000, 25: 220_000, 50: 224_000,
                                     75: 226_000, 95: 228_000},
                lockup_quantiles_khz=None,
            )


class TestSizeIndependence:
    def _campaign(self, params, cache, probability_fn, sizes, reps):
        backend = SimulatedBackend(params, probability_fn=probability_fn, cache=cache)
        plan = SweepPlan(
            voltages_mv=(1000,),
            start_freq_khz=218_000,
            sizes=sizes,
            repetitions=reps,
            stop_rule=FixedCeiling(218_000),
        )
        return execute_plan(backend, plan, campaign_seed=3)

    def test_model_passes(self, params, cache):
        records = self._campaign(
            params, cache, model_probabilities,
            sizes=(1000, 2000, 3000, 4000, 5000), reps=30,
        )
        slope, verdict = size_independence_test(records)
        assert verdict
        assert abs(slope * 4000) < 0.05

    def test_per_cycle_fault_model_fails(self, params, cache):
        def per_item(params_, op, n_items):
            p = 1.0 - (1.0 - 2e-6) ** n_items
            return OutcomeProbabilities(p_error=p, p_lockup=0.0)

        records = self._campaign(
            params, cache, per_item,
            sizes=(50_000, 100_000, 150_000, 200_000, 250_000), reps=20,
        )
        slope, verdict = size_independence_test(records)
        assert not verdict
        assert slope > 0

    def test_all_correct_is_insufficient(self, params, cache):
        records = self._campaign(
            params, cache, never_fail, sizes=(100, 200, 300, 400, 500), reps=2
        )
        with pytest.raises(InsufficientData):
            size_independence_test(records)

    def test_too_few_sizes(self):
        records = [
            error_record(220_000, n_items=n, rep=r)
            for n in (100, 200) for r in range(3)
        ]
        with pytest.raises(InsufficientData):
            size_independence_test(records)

    def test_lockups_excluded_from_denominator(self):
        # At the error frequency, half the runs per size locked up and the
        # other half erred: the error rate among completed runs is 1.0 at
        # every size, which is perfectly flat.
        records = []
        for n in (100, 200, 300, 400, 500):
            records.append(error_record(220_000, n_items=n, rep=0))
            records.append(
                error_record(220_000, n_items=n, rep=1, outcome=Outcome.LOCKUP)
            )
        slope, verdict = size_independence_test(records)
        assert verdict
        assert slope == pytest.approx(0.0, abs=1e-12)
