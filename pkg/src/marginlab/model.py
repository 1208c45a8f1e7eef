"""Device model: guardband envelope, failure onsets, outcome probabilities, power.

The modeled part is a two-domain MPSoC (a fabric controller plus an 8-core
cluster) whose supply can be programmed from 1.0 V to 1.2 V in 50 mV steps.
The datasheet guardband table gives the vendor's maximum safe frequency per
step and domain; everything this package explores happens at or beyond that
envelope.

Failure behavior beyond the envelope is modeled with two critical
frequencies per voltage, one for compute errors and one for lockups, each
following an alpha-power delay law in voltage.  Around each onset the
per-attempt failure probability rises as a logistic in frequency.  The
probabilities depend on voltage and frequency only, never on how much work
a run performs; that choice is what makes error rates independent of
problem size, and the sweep module tests exactly that property.

Power is first-order CMOS: a dynamic term proportional to n * V^2 * f plus
a static/converter term proportional to V.  Energy is power times time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

from .errors import (
    DegenerateVoltage,
    InvalidCoreCount,
    UnsupportedVoltage,
)

SUPPLY_STEPS_MV = (1000, 1050, 1100, 1150, 1200)
SUPPLY_MIN_MV = SUPPLY_STEPS_MV[0]
SUPPLY_MAX_MV = SUPPLY_STEPS_MV[-1]


class ClockDomain(Enum):
    FABRIC_CONTROLLER = "fc"
    CLUSTER = "cluster"


@dataclass(frozen=True)
class OperatingPoint:
    """A (voltage, frequency, clock domain) triple on the supply's step grid.

    Frequencies are integer kHz so the 2 MHz sweep grid is exact.
    """

    voltage_mv: int
    freq_khz: int
    domain: ClockDomain = ClockDomain.CLUSTER

    def __post_init__(self):
        if self.voltage_mv not in SUPPLY_STEPS_MV:
            raise UnsupportedVoltage(
                f"voltage {self.voltage_mv} mV is not a supply step "
                f"{SUPPLY_STEPS_MV}"
            )
        if not isinstance(self.freq_khz, int) or self.freq_khz <= 0:
            raise ValueError(f"freq_khz must be a positive integer, got {self.freq_khz!r}")


@dataclass(frozen=True)
class GuardbandTable:
    """Datasheet maximum frequencies per supply step and clock domain.

    rows: (voltage_mv, fc_max_khz, cluster_max_khz), voltages strictly
    decreasing from 1200 to 1000 mV.
    """

    rows: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        voltages = [r[0] for r in self.rows]
        if voltages != sorted(SUPPLY_STEPS_MV, reverse=True):
            raise ValueError(
                f"table must hold exactly the steps {SUPPLY_STEPS_MV} in "
                f"decreasing order, got {voltages}"
            )
        by_voltage = sorted(self.rows)
        for col in (1, 2):
            values = [r[col] for r in by_voltage]
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ValueError("guardband frequencies must strictly increase with voltage")

    def row(self, voltage_mv: int) -> tuple[int, int, int]:
        for r in self.rows:
            if r[0] == voltage_mv:
                return r
        raise UnsupportedVoltage(
            f"voltage {voltage_mv} mV is not a supply step {SUPPLY_STEPS_MV}"
        )


# Vendor datasheet limits for the modeled device.
DATASHEET_GUARDBANDS = GuardbandTable(
    rows=(
        (1200, 250_000, 170_000),
        (1150, 225_000, 149_000),
        (1100, 200_000, 129_000),
        (1050, 175_000, 108_000),
        (1000, 150_000, 87_000),
    )
)


@dataclass(frozen=True)
class DeviceModelParams:
    """Calibrated constants of the failure and power model.

    Onset constants follow f = k * (V - v_th)^alpha / V with V in mV and f
    in kHz.  The exponent may fall below 1 when the calibrated headroom
    curve is concave in voltage; in that regime v_th must be large enough
    that onsets still strictly increase over the supply range, which the
    constructor enforces.

    delta(V), the signed offset of the lockup onset relative to the error
    onset, is piecewise linear in voltage: it is zero at crossover_mv,
    positive below it (errors appear first) and negative above it (lockups
    appear first).  The two slopes are independent because the observable
    consequences of the offset are asymmetric: below the crossover the
    offset must exceed sampling noise of first occurrences, while above it
    a large offset would hide errors behind lockups entirely.

    supply_offset_mv is a disabled-by-default hook for supply-delivery
    effects at the top steps; nonzero values shift the voltage seen by the
    onset law.
    """

    v_th_mv: float
    alpha: float
    k_err: float
    k_lock: float
    w_err_khz: float
    w_lock_khz: float
    c_eff: float
    p_static_coeff: float
    cycles_per_item: int
    crossover_mv: int = 1100
    delta_slope_lo_khz_per_mv: float = 140.0
    delta_slope_hi_khz_per_mv: float = 15.0
    supply_offset_mv: int = 0

    def __post_init__(self):
        if not self.v_th_mv < SUPPLY_MIN_MV:
            raise ValueError(f"v_th_mv must be below {SUPPLY_MIN_MV}, got {self.v_th_mv}")
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must be in (0, 2], got {self.alpha}")
        if self.alpha < 1.0 and self.v_th_mv <= (1.0 - self.alpha) * SUPPLY_MAX_MV:
            # Sufficient condition for d/dV [(V - v_th)^alpha / V] > 0
            # across the supply range when alpha < 1.
            raise ValueError(
                "with alpha < 1, v_th_mv must exceed (1 - alpha) * "
                f"{SUPPLY_MAX_MV} to keep onsets increasing in voltage"
            )
        for name in ("k_err", "k_lock", "w_err_khz", "w_lock_khz", "c_eff", "p_static_coeff"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.cycles_per_item <= 0:
            raise ValueError(f"cycles_per_item must be > 0, got {self.cycles_per_item}")
        if self.delta_slope_lo_khz_per_mv < 0 or self.delta_slope_hi_khz_per_mv < 0:
            raise ValueError("delta slopes must be non-negative")


@dataclass(frozen=True)
class OutcomeProbabilities:
    p_error: float
    p_lockup: float

    def __post_init__(self):
        for name in ("p_error", "p_lockup"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


class OnsetFrequencies(NamedTuple):
    f_err_onset_khz: float
    f_lock_onset_khz: float


def logistic(x: float) -> float:
    """Numerically stable 1 / (1 + exp(-x))."""
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def guardband_max_freq(table: GuardbandTable, voltage_mv: int, domain: ClockDomain) -> int:
    """Datasheet maximum frequency in kHz for a supply step and domain."""
    row = table.row(voltage_mv)
    return row[1] if domain is ClockDomain.FABRIC_CONTROLLER else row[2]


def within_guardband(table: GuardbandTable, op: OperatingPoint) -> bool:
    """True iff the operating point does not exceed its datasheet limit."""
    return op.freq_khz <= guardband_max_freq(table, op.voltage_mv, op.domain)


def delta_khz(params: DeviceModelParams, voltage_mv: float) -> float:
    """Signed lockup-onset offset at a voltage, in kHz."""
    gap_mv = params.crossover_mv - voltage_mv
    slope = (
        params.delta_slope_lo_khz_per_mv
        if voltage_mv <= params.crossover_mv
        else params.delta_slope_hi_khz_per_mv
    )
    return slope * gap_mv


def onset_frequencies(params: DeviceModelParams, voltage_mv: int) -> OnsetFrequencies:
    """Critical frequencies (kHz) where errors and lockups begin at a voltage.

    Both follow the alpha-power form; the lockup onset additionally carries
    the signed crossover offset delta(V).
    """
    v_eff = voltage_mv + params.supply_offset_mv
    if v_eff <= params.v_th_mv:
        raise DegenerateVoltage(
            f"voltage {voltage_mv} mV is at or below the threshold analog "
            f"{params.v_th_mv} mV"
        )
    base = (v_eff - params.v_th_mv) ** params.alpha / v_eff
    f_err = params.k_err * base
    f_lock = params.k_lock * base + delta_khz(params, voltage_mv)
    return OnsetFrequencies(f_err, f_lock)


def outcome_probabilities(params: DeviceModelParams, op: OperatingPoint) -> OutcomeProbabilities:
    """Per-attempt failure probabilities at an operating point.

    Logistic in frequency around each onset.  A run's workload size never
    enters: two runs at the same (V, f) face identical odds regardless of
    how many items they process.
    """
    onsets = onset_frequencies(params, op.voltage_mv)
    p_err = logistic((op.freq_khz - onsets.f_err_onset_khz) / params.w_err_khz)
    p_lock = logistic((op.freq_khz - onsets.f_lock_onset_khz) / params.w_lock_khz)
    return OutcomeProbabilities(p_error=p_err, p_lockup=p_lock)


def power(params: DeviceModelParams, op: OperatingPoint, n_active_cores: int) -> float:
    """Average power in watts at an operating point with n cores switching.

    P = c_eff * n * V^2 * f + p_static_coeff * V, V in volts, f in Hz.
    """
    if not isinstance(n_active_cores, int) or not 1 <= n_active_cores <= 9:
        raise InvalidCoreCount(
            f"n_active_cores must be an integer in [1, 9], got {n_active_cores!r}"
        )
    v = op.voltage_mv / 1000.0
    f_hz = op.freq_khz * 1000.0
    return params.c_eff * n_active_cores * v * v * f_hz + params.p_static_coeff * v


def energy(avg_power_w: float, elapsed_s: float) -> float:
    """Energy in joules from average power and elapsed time."""
    if avg_power_w < 0 or elapsed_s < 0:
        raise ValueError("power and time must be non-negative")
    return avg_power_w * elapsed_s
