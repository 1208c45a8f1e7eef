"""Tests for run execution against the simulated device."""

import pytest
from hypothesis import given, settings, strategies as st

from marginlab import (
    OperatingPoint,
    OutcomeProbabilities,
    PrngSpec,
    RunRequest,
    RunResponse,
    SimulatedBackend,
    derive_run_seed,
    golden_value,
    make_request,
    model_probabilities,
    power,
    simulated_run,
)

GUARDBAND_OP = OperatingPoint(1000, 87_000)
SPEC = PrngSpec(1, 50_000)
GOLDEN_50K = 0xA35795CA537B27F9


def always(p_error, p_lockup):
    def fn(params, op, n_items):
        return OutcomeProbabilities(p_error=p_error, p_lockup=p_lockup)
    return fn


class TestRunPlumbing:
    def test_request_timeout_margin(self, params):
        req = make_request(params, GUARDBAND_OP, SPEC)
        duration = SPEC.n_items * params.cycles_per_item / 87_000_000.0
        assert req.timeout_s == pytest.approx(3.0 * duration)

    def test_request_custom_factor(self, params):
        req = make_request(params, GUARDBAND_OP, SPEC, timeout_factor=10.0)
        assert req.timeout_s == pytest.approx(10.0 * SPEC.n_items * 140 / 87_000_000.0)

    def test_nonpositive_timeout_rejected(self):
        with pytest.raises(ValueError):
            RunRequest(op=GUARDBAND_OP, spec=SPEC, timeout_s=0.0)

    def test_response_value_iff_not_timed_out(self):
        with pytest.raises(ValueError):
            RunResponse(value=None, timed_out=False, elapsed_s=1.0, avg_power_w=1.0)
        with pytest.raises(ValueError):
            RunResponse(value=5, timed_out=True, elapsed_s=1.0, avg_power_w=1.0)


class TestDeriveRunSeed:
    def test_frozen_value(self):
        assert derive_run_seed(1, 1000, 87_000, 50_000, 0) == 0x8262FA729264BDA4

    def test_stable(self):
        a = derive_run_seed(42, 1100, 200_000, 100_000, 3)
        b = derive_run_seed(42, 1100, 200_000, 100_000, 3)
        assert a == b

    def test_sensitive_to_every_coordinate(self):
        base = derive_run_seed(1, 1000, 200_000, 50_000, 0)
        assert derive_run_seed(2, 1000, 200_000, 50_000, 0) != base
        assert derive_run_seed(1, 1050, 200_000, 50_000, 0) != base
        assert derive_run_seed(1, 1000, 202_000, 50_000, 0) != base
        assert derive_run_seed(1, 1000, 200_000, 100_000, 0) != base
        assert derive_run_seed(1, 1000, 200_000, 50_000, 1) != base

    @given(st.integers(0, (1 << 64) - 1))
    @settings(max_examples=30)
    def test_in_u64_range(self, campaign_seed):
        s = derive_run_seed(campaign_seed, 1200, 340_000, 250_000, 4)
        assert 0 <= s < (1 << 64)


class TestSimulatedRun:
    def test_clean_run_returns_golden(self, params, cache):
        req = make_request(params, GUARDBAND_OP, SPEC)
        resp = simulated_run(params, req, rng_seed=7, cache=cache)
        assert resp.value == GOLDEN_50K
        assert not resp.timed_out
        assert resp.elapsed_s == pytest.approx(SPEC.n_items * 140 / 87_000_000.0)
        assert resp.avg_power_w == pytest.approx(power(params, GUARDBAND_OP, 2))

    def test_deterministic(self, params, cache):
        req = make_request(params, OperatingPoint(1000, 230_000), SPEC)
        runs = [
            simulated_run(params, req, rng_seed=99, cache=cache) for _ in range(3)
        ]
        assert runs[0] == runs[1] == runs[2]

    def test_forced_lockup(self, params, cache):
        req = make_request(params, GUARDBAND_OP, SPEC)
        resp = simulated_run(
            params, req, rng_seed=1, probability_fn=always(0.0, 1.0), cache=cache
        )
        assert resp.timed_out
        assert resp.value is None
        assert resp.elapsed_s == req.timeout_s

    def test_forced_error_corrupts_value(self, params, cache):
        req = make_request(params, GUARDBAND_OP, SPEC)
        resp = simulated_run(
            params, req, rng_seed=1, probability_fn=always(1.0, 0.0), cache=cache
        )
        assert not resp.timed_out
        assert resp.value is not None
        assert resp.value != GOLDEN_50K

    def test_lockup_shadows_error(self, params, cache):
        req = make_request(params, GUARDBAND_OP, SPEC)
        resp = simulated_run(
            params, req, rng_seed=1, probability_fn=always(1.0, 1.0), cache=cache
        )
        assert resp.timed_out

    def test_corruption_varies_with_seed(self, params, cache):
        req = make_request(params, GUARDBAND_OP, SPEC)
        values = {
            simulated_run(
                params, req, rng_seed=s, probability_fn=always(1.0, 0.0), cache=cache
            ).value
            for s in range(8)
        }
        assert len(values) > 1

    def test_timeout_must_exceed_duration(self, params, cache):
        duration = SPEC.n_items * params.cycles_per_item / 87_000_000.0
        req = RunRequest(op=GUARDBAND_OP, spec=SPEC, timeout_s=duration)
        with pytest.raises(ValueError):
            simulated_run(params, req, rng_seed=1, cache=cache)

    def test_model_probabilities_ignore_problem_size(self, params):
        op = OperatingPoint(1000, 220_000)
        assert model_probabilities(params, op, 10) == model_probabilities(
            params, op, 10_000_000
        )


class TestSimulatedBackend:
    def test_matches_free_function(self, params, backend, cache):
        req = make_request(params, OperatingPoint(1050, 260_000), SPEC)
        seed = derive_run_seed(5, 1050, 260_000, SPEC.n_items, 0)
        assert backend.run(req, seed) == simulated_run(params, req, seed, cache=cache)

    def test_exposes_params(self, params, backend):
        assert backend.params is params

    def test_custom_probability_fn(self, params, cache):
        be = SimulatedBackend(params, probability_fn=always(0.0, 0.0), cache=cache)
        req = make_request(params, OperatingPoint(1000, 400_000), SPEC)
        resp = be.run(req, rng_seed=123)
        assert resp.value == GOLDEN_50K
