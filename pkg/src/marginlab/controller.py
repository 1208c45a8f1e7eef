"""Closed-loop adaptive voltage scaling driven by observed error rate.

The loop runs a fixed-size window of checked runs at the target
frequency, measures the window's error rate, and moves the supply one
step at a time to keep that rate inside configured bounds.  Errored runs
are charged a rollback-and-rerun recovery cost; a lockup forces an
immediate step up plus a safety hold.  Episodes report total energy,
recovery overhead, and net energy against the guardband-compliant
voltage for the same work.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .calibration import guardband_voltage_for
from .errors import InfeasibleTarget, NoGuardbandBaseline
from .model import (
    DATASHEET_GUARDBANDS,
    SUPPLY_STEPS_MV,
    DeviceModelParams,
    GuardbandTable,
    OperatingPoint,
    onset_frequencies,
    outcome_probabilities,
    power,
)

# FC plus the checked compute core, matching the characterization runs.
EPISODE_ACTIVE_CORES = 2

DEFAULT_RUN_CYCLES = 7_000_000
DEFAULT_SAFETY_MARGIN_KHZ = 20_000


class Action(Enum):
    STEP_DOWN = "step_down"
    STEP_UP = "step_up"
    HOLD = "hold"


class Status(Enum):
    SEEKING = "seeking"
    SETTLED = "settled"
    SAFETY_HOLD = "safety_hold"


@dataclass(frozen=True)
class ControllerConfig:
    target_freq_khz: int
    window_runs: int = 200
    error_rate_bounds: tuple[float, float] = (0.001, 0.01)
    run_cycles: int = DEFAULT_RUN_CYCLES
    recovery_cost_cycles: int | None = None
    settle_windows: int = 3
    safety_margin_khz: int = DEFAULT_SAFETY_MARGIN_KHZ
    start_voltage_mv: int | None = None

    def __post_init__(self) -> None:
        lo, hi = self.error_rate_bounds
        if not (0 <= lo < hi < 1):
            raise ValueError(f"need 0 <= lo < hi < 1, got {self.error_rate_bounds}")
        if self.window_runs < 10:
            raise ValueError("window must cover at least 10 runs")
        if self.target_freq_khz < 1 or self.run_cycles < 1:
            raise ValueError("target frequency and run cycles must be positive")
        if self.settle_windows < 1:
            raise ValueError("settle_windows must be >= 1")
        if self.recovery_cost_cycles is None:
            # Rollback restores checkpointed state then re-executes the
            # failed unit of work: charge two full runs.
            object.__setattr__(self, "recovery_cost_cycles", 2 * self.run_cycles)
        elif self.recovery_cost_cycles < 0:
            raise ValueError("recovery cost must be >= 0")
        if self.start_voltage_mv is not None and self.start_voltage_mv not in SUPPLY_STEPS_MV:
            raise ValueError(f"start voltage {self.start_voltage_mv} is not a supply step")


@dataclass(frozen=True)
class ControllerState:
    voltage_mv: int
    last_window_error_count: int = 0
    windows_elapsed: int = 0
    status: Status = Status.SEEKING
    consecutive_holds: int = 0
    safety_hold_remaining: int = 0

    def __post_init__(self) -> None:
        if self.voltage_mv not in SUPPLY_STEPS_MV:
            raise ValueError(f"{self.voltage_mv} mV is not a supply step")


@dataclass(frozen=True)
class WindowTrace:
    index: int
    voltage_mv: int
    error_count: int
    lockup_count: int
    rate: float
    action: Action
    status: Status
    duration_s: float
    energy_j: float


@dataclass(frozen=True)
class EpisodeReport:
    config: ControllerConfig
    final_state: ControllerState
    total_energy_j: float
    useful_cycles: int
    recovery_cycles: int
    overhead: float
    lockup_events: int
    settled_voltage_mv: int | None
    settled_rate: float | None
    baseline_voltage_mv: int
    baseline_energy_j: float
    net_savings: float
    baseline_within_guardband: bool
    trace: tuple[WindowTrace, ...]


def _step_index(voltage_mv: int) -> int:
    return SUPPLY_STEPS_MV.index(voltage_mv)


def episode_seed(campaign_seed: int, episode_index: int) -> int:
    """Independent per-episode seed from the campaign seed."""
    payload = struct.pack(
        "<QQ", campaign_seed & ((1 << 64) - 1), episode_index & ((1 << 64) - 1)
    )
    return int.from_bytes(
        hashlib.blake2b(payload, digest_size=8).digest(), "little"
    )


def controller_step(
    state: ControllerState,
    config: ControllerConfig,
    window_error_count: int,
    lockup_observed: bool = False,
) -> tuple[ControllerState, Action]:
    """One decision at the end of a completed window.

    Rate above the band steps the supply up; rate below it steps down
    unless already at the bottom step.  A lockup overrides everything:
    step up immediately and hold for settle_windows windows.  The state
    reaches Settled after settle_windows consecutive holds.
    """
    lo, hi = config.error_rate_bounds
    rate = window_error_count / config.window_runs
    idx = _step_index(state.voltage_mv)
    at_min = idx == 0
    at_max = idx == len(SUPPLY_STEPS_MV) - 1

    if lockup_observed:
        action = Action.HOLD if at_max else Action.STEP_UP
        new_v = state.voltage_mv if at_max else SUPPLY_STEPS_MV[idx + 1]
        new = ControllerState(
            voltage_mv=new_v,
            last_window_error_count=window_error_count,
            windows_elapsed=state.windows_elapsed + 1,
            status=Status.SAFETY_HOLD,
            consecutive_holds=0,
            safety_hold_remaining=config.settle_windows,
        )
        return new, action

    if state.status is Status.SAFETY_HOLD and state.safety_hold_remaining > 1:
        new = replace(
            state,
            last_window_error_count=window_error_count,
            windows_elapsed=state.windows_elapsed + 1,
            safety_hold_remaining=state.safety_hold_remaining - 1,
        )
        return new, Action.HOLD
    # Safety hold expiring this window: fall through to the normal rule.

    if rate > hi:
        action = Action.HOLD if at_max else Action.STEP_UP
    elif rate < lo and not at_min:
        action = Action.STEP_DOWN
    else:
        action = Action.HOLD

    if action is Action.STEP_UP:
        new_v, holds = SUPPLY_STEPS_MV[idx + 1], 0
    elif action is Action.STEP_DOWN:
        new_v, holds = SUPPLY_STEPS_MV[idx - 1], 0
    else:
        new_v, holds = state.voltage_mv, state.consecutive_holds + 1

    status = Status.SETTLED if holds >= config.settle_windows else Status.SEEKING
    new = ControllerState(
        voltage_mv=new_v,
        last_window_error_count=window_error_count,
        windows_elapsed=state.windows_elapsed + 1,
        status=status,
        consecutive_holds=holds,
        safety_hold_remaining=0,
    )
    return new, action


def _feasible(params: DeviceModelParams, config: ControllerConfig) -> bool:
    for v in SUPPLY_STEPS_MV:
        onset = onset_frequencies(params, v)
        if onset.f_lock_onset_khz - config.safety_margin_khz >= config.target_freq_khz:
            return True
    return False


def run_episode(
    params: DeviceModelParams,
    config: ControllerConfig,
    campaign_seed: int,
    duration_windows: int,
    table: GuardbandTable = DATASHEET_GUARDBANDS,
) -> EpisodeReport:
    """Simulate duration_windows control windows at the target frequency.

    Each window samples the window's lockup and error counts from the
    model's per-run odds at the current operating point (a lockup
    shadows that run's error draw), charges recovery_cost_cycles per
    failed run, integrates energy over useful plus recovery time, and
    then lets the controller act.  The baseline for net savings is the
    same useful work at the guardband voltage for the target frequency;
    if no guardband covers it, the top supply step is used and flagged.
    """
    if duration_windows < 1:
        raise ValueError("episode needs at least one window")
    if not _feasible(params, config):
        raise InfeasibleTarget(
            f"target {config.target_freq_khz} kHz is within "
            f"{config.safety_margin_khz} kHz of every step's lockup onset"
        )
    rng = np.random.Generator(np.random.PCG64(campaign_seed))
    start_v = (
        config.start_voltage_mv
        if config.start_voltage_mv is not None
        else SUPPLY_STEPS_MV[-1]
    )
    state = ControllerState(voltage_mv=start_v)
    f_hz = config.target_freq_khz * 1e3
    t_rec = config.recovery_cost_cycles

    total_energy = 0.0
    useful_cycles = 0
    recovery_cycles = 0
    lockup_events = 0
    settled_windows: list[float] = []
    trace: list[WindowTrace] = []

    for i in range(duration_windows):
        op = OperatingPoint(state.voltage_mv, config.target_freq_khz)
        probs = outcome_probabilities(params, op)
        n_lock = int(rng.binomial(config.window_runs, probs.p_lockup))
        n_err = int(rng.binomial(config.window_runs - n_lock, probs.p_error))
        lockup_events += n_lock

        window_useful = config.window_runs * config.run_cycles
        window_recovery = (n_err + n_lock) * t_rec
        duration_s = (window_useful + window_recovery) / f_hz
        window_energy = power(params, op, EPISODE_ACTIVE_CORES) * duration_s

        total_energy += window_energy
        useful_cycles += window_useful
        recovery_cycles += window_recovery

        state, action = controller_step(state, config, n_err, n_lock > 0)
        if state.status is Status.SETTLED:
            settled_windows.append(n_err / config.window_runs)
        trace.append(
            WindowTrace(
                index=i,
                voltage_mv=op.voltage_mv,
                error_count=n_err,
                lockup_count=n_lock,
                rate=n_err / config.window_runs,
                action=action,
                status=state.status,
                duration_s=duration_s,
                energy_j=window_energy,
            )
        )

    try:
        baseline_v = guardband_voltage_for(table, config.target_freq_khz)
        baseline_in_band = True
    except NoGuardbandBaseline:
        baseline_v = SUPPLY_STEPS_MV[-1]
        baseline_in_band = False
    baseline_op = OperatingPoint(baseline_v, config.target_freq_khz)
    baseline_energy = power(params, baseline_op, EPISODE_ACTIVE_CORES) * (
        useful_cycles / f_hz
    )

    return EpisodeReport(
        config=config,
        final_state=state,
        total_energy_j=total_energy,
        useful_cycles=useful_cycles,
        recovery_cycles=recovery_cycles,
        overhead=recovery_cycles / (useful_cycles + recovery_cycles),
        lockup_events=lockup_events,
        settled_voltage_mv=state.voltage_mv if state.status is Status.SETTLED else None,
        settled_rate=(
            sum(settled_windows) / len(settled_windows) if settled_windows else None
        ),
        baseline_voltage_mv=baseline_v,
        baseline_energy_j=baseline_energy,
        net_savings=1.0 - total_energy / baseline_energy,
        baseline_within_guardband=baseline_in_band,
        trace=tuple(trace),
    )
