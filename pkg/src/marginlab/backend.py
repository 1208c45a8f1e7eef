"""Execution backends: who actually runs a test point.

The simulated backend drives the device model: it samples a lockup first
(the run never answers and burns the full timeout), then an error (the
returned last value is a corrupted stream), else returns the golden value.
Elapsed time and average power come from the workload duration and the
power model with one active cluster core plus the fabric controller.

Determinism contract: a run's randomness is fully determined by an
explicit 64-bit rng_seed.  Campaign code derives that seed by hashing the
campaign seed with the run's coordinates (voltage, frequency, size,
repetition), so any scheduling of runs across any number of workers
produces identical results.  Hardware backends are strictly sequential
(one serial line) and are exempt.

The probability source is injectable.  The default consults the device
model and ignores the problem size; tests plug in alternative sources,
for example a per-cycle hazard model that the size-independence check
must be able to reject.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Callable, Protocol

from .model import (
    DeviceModelParams,
    OperatingPoint,
    OutcomeProbabilities,
    outcome_probabilities,
    power,
)
from .workloads import (
    GoldenCache,
    PrngSpec,
    golden_cache,
    golden_value,
    inject_corruption,
    workload_duration,
)

# Experiment runs keep the fabric controller alive for orchestration while
# one cluster core executes the workload.
RUN_ACTIVE_CORES = 2

DEFAULT_TIMEOUT_FACTOR = 3.0


@dataclass(frozen=True)
class RunRequest:
    op: OperatingPoint
    spec: PrngSpec
    timeout_s: float

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError(f"timeout_s must be > 0, got {self.timeout_s}")


@dataclass(frozen=True)
class RunResponse:
    """Outcome of one run: a last value, or a timeout (no response).

    value is None exactly when the run timed out, in which case elapsed_s
    equals the request's timeout.
    """

    value: int | None
    timed_out: bool
    elapsed_s: float
    avg_power_w: float

    def __post_init__(self):
        if self.timed_out != (self.value is None):
            raise ValueError("timed_out must hold exactly when value is absent")
        if self.avg_power_w < 0:
            raise ValueError("avg_power_w must be non-negative")


def make_request(
    params: DeviceModelParams,
    op: OperatingPoint,
    spec: PrngSpec,
    timeout_factor: float = DEFAULT_TIMEOUT_FACTOR,
) -> RunRequest:
    """Request with the default timeout margin over the expected duration."""
    duration = workload_duration(spec, op, params.cycles_per_item)
    return RunRequest(op=op, spec=spec, timeout_s=timeout_factor * duration)


def derive_run_seed(
    campaign_seed: int,
    voltage_mv: int,
    freq_khz: int,
    n_items: int,
    repetition_index: int,
) -> int:
    """Per-run rng seed from the campaign seed and run coordinates.

    Stable across platforms, processes and scheduling order; this is what
    makes campaign output byte-identical for any worker count.
    """
    payload = struct.pack(
        "<QqqqQ", campaign_seed & ((1 << 64) - 1), voltage_mv, freq_khz, n_items,
        repetition_index,
    )
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "little")


class _DrawStream:
    """splitmix64 sequence used for a run's few random decisions."""

    _GAMMA = 0x9E3779B97F4A7C15
    _MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self._x = seed & self._MASK

    def next_u64(self) -> int:
        self._x = (self._x + self._GAMMA) & self._MASK
        z = self._x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self._MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self._MASK
        return z ^ (z >> 31)

    def next_unit(self) -> float:
        return (self.next_u64() >> 11) * 2.0 ** -53


ProbabilityFn = Callable[[DeviceModelParams, OperatingPoint, int], OutcomeProbabilities]


def model_probabilities(
    params: DeviceModelParams, op: OperatingPoint, n_items: int
) -> OutcomeProbabilities:
    """Default probability source: the device model; n_items is ignored."""
    return outcome_probabilities(params, op)


def simulated_run(
    params: DeviceModelParams,
    req: RunRequest,
    rng_seed: int,
    probability_fn: ProbabilityFn = model_probabilities,
    n_active_cores: int = RUN_ACTIVE_CORES,
    cache: GoldenCache | None = None,
) -> RunResponse:
    """One simulated test run; a pure function of its arguments."""
    duration = workload_duration(req.spec, req.op, params.cycles_per_item)
    if req.timeout_s <= duration:
        raise ValueError(
            f"timeout {req.timeout_s}s does not exceed expected duration {duration}s"
        )
    probs = probability_fn(params, req.op, req.spec.n_items)
    avg_power = power(params, req.op, n_active_cores)
    draws = _DrawStream(rng_seed)
    if draws.next_unit() < probs.p_lockup:
        return RunResponse(
            value=None, timed_out=True, elapsed_s=req.timeout_s, avg_power_w=avg_power
        )
    if draws.next_unit() < probs.p_error:
        flip_iteration = 1 + draws.next_u64() % req.spec.n_items
        bit_index = draws.next_u64() % 64
        value = inject_corruption(req.spec, flip_iteration, bit_index, cache=cache)
    else:
        value = golden_value(req.spec, cache=cache)
    return RunResponse(
        value=value, timed_out=False, elapsed_s=duration, avg_power_w=avg_power
    )


class Backend(Protocol):
    """Anything that can execute a run request deterministically."""

    params: DeviceModelParams

    def run(self, req: RunRequest, rng_seed: int) -> RunResponse: ...


class SimulatedBackend:
    """Model-driven backend suitable for concurrent use."""

    def __init__(
        self,
        params: DeviceModelParams,
        probability_fn: ProbabilityFn = model_probabilities,
        n_active_cores: int = RUN_ACTIVE_CORES,
        cache: GoldenCache | None = None,
    ):
        self.params = params
        self.probability_fn = probability_fn
        self.n_active_cores = n_active_cores
        self.cache = cache or golden_cache()

    def run(self, req: RunRequest, rng_seed: int) -> RunResponse:
        return simulated_run(
            self.params,
            req,
            rng_seed,
            probability_fn=self.probability_fn,
            n_active_cores=self.n_active_cores,
            cache=self.cache,
        )
