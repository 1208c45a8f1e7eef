"""Self-checking workloads executed at each test point.

The margin-probing workload generates a sequence of N pseudo-random
numbers and reports only the last one; the host compares it against a
golden value computed once per (seed, N).  The generator is the
xorshift64-star family (see constants).  Its state update is linear over
GF(2) and bijective, so two streams that ever differ in state never
reconverge, and the final multiplicative scramble is odd and therefore
also a bijection.  Together those two facts make last-value comparison a
sound detector for any single-bit state corruption at any iteration.

The bijection argument also allows a fast corruption path: flipping state
bit b at iteration i changes the final state by T^(N-i) applied to that
single bit, where T is the linear state update.  Precomputed bit-matrix
powers of T make the fast path O(64 log N) instead of O(N); it is verified
against the step-by-step reference exhaustively in tests.

The energy-load workload is a pure cycle count spread across cluster
cores; its algorithmic content is out of scope and never checked.
"""

from __future__ import annotations

import threading
from bisect import bisect_right
from dataclasses import dataclass

from .constants import (
    DEFAULT_CYCLES_PER_ITEM,
    FORBIDDEN_SEED,
    MASK64,
    OUTPUT_MULTIPLIER,
    XSHIFT_A,
    XSHIFT_B,
    XSHIFT_C,
)
from .errors import IndexOutOfRange, InvalidSeed
from .model import OperatingPoint


@dataclass(frozen=True)
class PrngSpec:
    """A generator stream: 64-bit seed plus the number of outputs N."""

    seed: int
    n_items: int

    def __post_init__(self):
        if not isinstance(self.seed, int) or not 0 <= self.seed <= MASK64:
            raise InvalidSeed(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.seed == FORBIDDEN_SEED:
            raise InvalidSeed("seed 0 is the generator's fixed point and is forbidden")
        if not isinstance(self.n_items, int) or self.n_items < 1:
            raise InvalidSeed(f"n_items must be a positive integer, got {self.n_items!r}")


@dataclass(frozen=True)
class ParallelWorkloadSpec:
    """Multi-core energy load characterized only by its total cycle count."""

    n_cores: int
    total_cycles: int
    name: str = "parallel"

    def __post_init__(self):
        if not 1 <= self.n_cores <= 8:
            raise ValueError(f"n_cores must be in [1, 8], got {self.n_cores}")
        if self.total_cycles <= 0:
            raise ValueError(f"total_cycles must be > 0, got {self.total_cycles}")


def step_state(x: int) -> int:
    """One application of the linear state update T."""
    x ^= x >> XSHIFT_A
    x = (x ^ (x << XSHIFT_B)) & MASK64
    x ^= x >> XSHIFT_C
    return x


def output_of(state: int) -> int:
    """The output scramble applied to a state."""
    return (state * OUTPUT_MULTIPLIER) & MASK64


def _advance(state: int, steps: int) -> int:
    # Hot loop; keep everything local.
    a, b, c, mask = XSHIFT_A, XSHIFT_B, XSHIFT_C, MASK64
    x = state
    for _ in range(steps):
        x ^= x >> a
        x = (x ^ (x << b)) & mask
        x ^= x >> c
    return x


def prng_run(spec: PrngSpec) -> int:
    """The N-th output of the stream, computed by plain iteration."""
    return output_of(_advance(spec.seed, spec.n_items))


# ---------------------------------------------------------------------------
# Golden-value cache
#
# One pass to the largest requested N serves every smaller N of the same
# stream (stream prefix property).  States are checkpointed on a fixed
# stride so later queries below an already-visited index stay cheap.


_CHECKPOINT_STRIDE = 4096


class GoldenCache:
    """Thread-safe memo of stream states, keyed by (seed, iteration)."""

    def __init__(self):
        self._lock = threading.Lock()
        # seed -> (sorted iteration list, {iteration: state})
        self._streams: dict[int, tuple[list[int], dict[int, int]]] = {}
        self.steps_taken = 0  # total generator steps ever advanced

    def state_at(self, seed: int, n: int) -> int:
        with self._lock:
            indices, states = self._streams.setdefault(seed, ([0], {0: seed}))
            pos = bisect_right(indices, n) - 1
            start = indices[pos]
            x = states[start]
            if start == n:
                return x
            # Advance, dropping checkpoints along the way.
            a, b, c, mask = XSHIFT_A, XSHIFT_B, XSHIFT_C, MASK64
            for i in range(start + 1, n + 1):
                x ^= x >> a
                x = (x ^ (x << b)) & mask
                x ^= x >> c
                if i % _CHECKPOINT_STRIDE == 0 and i not in states:
                    self._insert(indices, states, i, x)
            self._insert(indices, states, n, x)
            self.steps_taken += n - start
            return x

    @staticmethod
    def _insert(indices: list[int], states: dict[int, int], i: int, x: int) -> None:
        if i not in states:
            indices.insert(bisect_right(indices, i), i)
            states[i] = x


_GOLDEN_CACHE = GoldenCache()


def golden_cache() -> GoldenCache:
    """The process-wide golden cache (exposed for stats and tests)."""
    return _GOLDEN_CACHE


def golden_value(spec: PrngSpec, cache: GoldenCache | None = None) -> int:
    """Reference last value for a stream, memoized across problem sizes."""
    cache = cache or _GOLDEN_CACHE
    return output_of(cache.state_at(spec.seed, spec.n_items))


# ---------------------------------------------------------------------------
# Corruption injection
#
# A linear map L over GF(2)^64 is stored as 64 images: matrix[b] = L(e_b).


def _apply_map(matrix: list[int], x: int) -> int:
    acc = 0
    b = 0
    while x:
        if x & 1:
            acc ^= matrix[b]
        x >>= 1
        b += 1
    return acc


def _compose(outer: list[int], inner: list[int]) -> list[int]:
    return [_apply_map(outer, img) for img in inner]


class _StepPowers:
    """Lazily extended ladder of T^(2^j) bit matrices."""

    def __init__(self):
        self._lock = threading.Lock()
        self._ladder: list[list[int]] = []

    def delta_after(self, bit_index: int, steps: int) -> int:
        """T^steps applied to the single-bit vector e_bit."""
        v = 1 << bit_index
        if steps == 0:
            return v
        with self._lock:
            j_max = steps.bit_length() - 1
            if not self._ladder:
                self._ladder.append([step_state(1 << b) for b in range(64)])
            while len(self._ladder) <= j_max:
                last = self._ladder[-1]
                self._ladder.append(_compose(last, last))
            j = 0
            while steps:
                if steps & 1:
                    v = _apply_map(self._ladder[j], v)
                steps >>= 1
                j += 1
        return v


_STEP_POWERS = _StepPowers()


def inject_corruption(
    spec: PrngSpec, flip_iteration: int, bit_index: int, cache: GoldenCache | None = None
) -> int:
    """Last value of a run whose state bit was flipped mid-stream.

    Equivalent to stepping to flip_iteration, XOR-flipping one state bit
    and continuing to N, but computed through the linearity of the state
    update: final_state = golden_state XOR T^(N - flip)(e_bit).
    """
    if not 1 <= flip_iteration <= spec.n_items:
        raise IndexOutOfRange(
            f"flip_iteration must be in [1, {spec.n_items}], got {flip_iteration}"
        )
    if not 0 <= bit_index <= 63:
        raise IndexOutOfRange(f"bit_index must be in [0, 63], got {bit_index}")
    cache = cache or _GOLDEN_CACHE
    end_state = cache.state_at(spec.seed, spec.n_items)
    delta = _STEP_POWERS.delta_after(bit_index, spec.n_items - flip_iteration)
    return output_of(end_state ^ delta)


def workload_duration(
    spec: PrngSpec | ParallelWorkloadSpec,
    op: OperatingPoint,
    cycles_per_item: int = DEFAULT_CYCLES_PER_ITEM,
) -> float:
    """Run duration in seconds at the operating point's frequency."""
    f_hz = op.freq_khz * 1000.0
    if isinstance(spec, PrngSpec):
        return spec.n_items * cycles_per_item / f_hz
    return spec.total_cycles / f_hz
