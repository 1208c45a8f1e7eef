"""Calibration of the device model against its behavioral targets.

Three facts pin the model to the characterized device:

1. Headroom: the frequency where errors begin sits well beyond the
   guardband at every supply step, with a per-voltage multiplier that
   falls linearly from 2.5x at the lowest step to 2.0x at the highest.
   The alpha-power onset law is least-squares fitted to those targets.
2. Ordering: which failure kind appears first flips with voltage; errors
   lead below the crossover voltage, lockups lead above it.  delta(V)
   encodes that with a sign change at the crossover.
3. Energy: running the reference workload at the lowest error-free supply
   step instead of its guardband voltage saves a target fraction of
   energy at equal frequency.  The static power coefficient is solved in
   closed form from that requirement.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import least_squares

from .constants import DEFAULT_CYCLES_PER_ITEM
from .errors import CalibrationDiverged, NoGuardbandBaseline
from .model import (
    ClockDomain,
    DATASHEET_GUARDBANDS,
    DeviceModelParams,
    GuardbandTable,
    OperatingPoint,
    SUPPLY_MAX_MV,
    SUPPLY_MIN_MV,
    SUPPLY_STEPS_MV,
    guardband_max_freq,
    onset_frequencies,
    power,
)


@dataclass(frozen=True)
class CalibrationTargets:
    """Behavioral targets the fitted params must reproduce.

    The headroom multiplier is interpolated linearly in voltage between
    the two endpoints.  reference_freq_khz is the frequency at which the
    savings target is enforced; it must be coverable by some supply step's
    guardband (the baseline) and error-free at the lowest step (the
    candidate).
    """

    multiplier_at_min_mv: float = 2.5
    multiplier_at_max_mv: float = 2.0
    crossover_mv: int = 1100
    savings_target: float = 0.27
    reference_freq_khz: int = 170_000
    savings_cores: int = 9  # 8 cluster cores plus the fabric controller
    fit_tolerance: float = 0.01
    savings_tolerance: float = 0.005
    # Non-fitted model constants, applied to the returned params.
    w_err_khz: float = 100.0
    w_lock_khz: float = 1500.0
    delta_slope_lo_khz_per_mv: float = 140.0
    delta_slope_hi_khz_per_mv: float = 15.0
    c_eff: float = 2.0e-11
    cycles_per_item: int = DEFAULT_CYCLES_PER_ITEM

    def multiplier(self, voltage_mv: int) -> float:
        t = (voltage_mv - SUPPLY_MIN_MV) / (SUPPLY_MAX_MV - SUPPLY_MIN_MV)
        return self.multiplier_at_min_mv + t * (
            self.multiplier_at_max_mv - self.multiplier_at_min_mv
        )


def headroom_targets_khz(table: GuardbandTable, targets: CalibrationTargets) -> dict[int, float]:
    """Per-voltage target error-onset frequencies in kHz."""
    return {
        v: targets.multiplier(v) * guardband_max_freq(table, v, ClockDomain.CLUSTER)
        for v in SUPPLY_STEPS_MV
    }


def _fit_onset_law(onset_targets: dict[int, float], tolerance: float):
    """Fit (v_th, alpha, k) of f = k * (V - v_th)^alpha / V to the targets.

    k is eliminated in closed form for each (v_th, alpha), leaving a 2-D
    relative-residual least-squares problem.  Returns (v_th, alpha, k,
    max_rel_residual).
    """
    voltages = np.array(sorted(onset_targets), dtype=float)
    wanted = np.array([onset_targets[int(v)] for v in voltages])

    def shape(x):
        v_th, alpha = x
        return (voltages - v_th) ** alpha / voltages

    def best_k(g):
        # argmin over k of sum((k*g/t - 1)^2)
        r = g / wanted
        return float(np.sum(r) / np.sum(r * r))

    def residuals(x):
        g = shape(x)
        k = best_k(g)
        return k * g / wanted - 1.0

    # The upper v_th bound keeps (V - v_th) positive with margin; the
    # lower alpha bound stays clear of degenerate flat laws.
    result = least_squares(
        residuals,
        x0=np.array([850.0, 0.8]),
        bounds=(np.array([1.0, 0.05]), np.array([995.0, 2.0])),
        xtol=1e-14,
        ftol=1e-14,
    )
    v_th, alpha = result.x
    g = shape(result.x)
    k = best_k(g)
    rel = np.abs(k * g / wanted - 1.0)
    worst = float(np.max(rel))
    if worst > tolerance:
        raise CalibrationDiverged(
            f"onset fit residual {worst:.4%} exceeds tolerance {tolerance:.2%}"
        )
    return float(v_th), float(alpha), float(k), worst


def guardband_voltage_for(table: GuardbandTable, freq_khz: int) -> int:
    """Lowest supply step whose cluster guardband covers freq_khz."""
    for v in SUPPLY_STEPS_MV:
        if freq_khz <= guardband_max_freq(table, v, ClockDomain.CLUSTER):
            return v
    raise NoGuardbandBaseline(
        f"no supply step's guardband reaches {freq_khz} kHz"
    )


def _solve_p_static(
    targets: CalibrationTargets, table: GuardbandTable
) -> float:
    """Closed-form static coefficient from the iso-performance savings target.

    With equal frequency and equal cycle counts, energy ratio equals power
    ratio, so the savings s at reference frequency f between the candidate
    step Vc and the baseline step Vb satisfies

        1 - s = (a f Vc^2 + b Vc) / (a f Vb^2 + b Vb),   a = cores * c_eff

    which solves to b = a f (Vc^2 - (1-s) Vb^2) / ((1-s) Vb - Vc).
    """
    s = targets.savings_target
    f_hz = targets.reference_freq_khz * 1000.0
    vb = guardband_voltage_for(table, targets.reference_freq_khz) / 1000.0
    vc = SUPPLY_MIN_MV / 1000.0
    a = targets.savings_cores * targets.c_eff
    denominator = (1.0 - s) * vb - vc
    if denominator >= 0:
        raise CalibrationDiverged(
            f"savings target {s:.2%} is not reachable between {vc} V and {vb} V"
        )
    b = a * f_hz * (vc * vc - (1.0 - s) * vb * vb) / denominator
    if b <= 0:
        raise CalibrationDiverged(
            f"savings target {s:.2%} requires non-positive static power; the "
            f"pure-dynamic limit at these voltages is {1 - (vc / vb) ** 2:.2%}"
        )
    return b


def calibrate(table: GuardbandTable, targets: CalibrationTargets) -> DeviceModelParams:
    """Fit DeviceModelParams to the behavioral targets.

    Raises CalibrationDiverged when the onset fit cannot reach its
    tolerance or the savings target is outside the power model's range.
    """
    onset_targets = headroom_targets_khz(table, targets)
    v_th, alpha, k, _ = _fit_onset_law(onset_targets, targets.fit_tolerance)
    p_static = _solve_p_static(targets, table)
    params = DeviceModelParams(
        v_th_mv=v_th,
        alpha=alpha,
        k_err=k,
        k_lock=k,
        w_err_khz=targets.w_err_khz,
        w_lock_khz=targets.w_lock_khz,
        c_eff=targets.c_eff,
        p_static_coeff=p_static,
        cycles_per_item=targets.cycles_per_item,
        crossover_mv=targets.crossover_mv,
        delta_slope_lo_khz_per_mv=targets.delta_slope_lo_khz_per_mv,
        delta_slope_hi_khz_per_mv=targets.delta_slope_hi_khz_per_mv,
    )
    _check_savings(params, targets, table)
    return params


def _check_savings(
    params: DeviceModelParams, targets: CalibrationTargets, table: GuardbandTable
) -> None:
    achieved = achieved_savings(params, targets, table)
    if abs(achieved - targets.savings_target) > targets.savings_tolerance:
        raise CalibrationDiverged(
            f"achieved savings {achieved:.4f} misses target "
            f"{targets.savings_target:.4f} by more than {targets.savings_tolerance}"
        )


def achieved_savings(
    params: DeviceModelParams, targets: CalibrationTargets, table: GuardbandTable
) -> float:
    """Iso-performance savings the params realize at the reference point."""
    f = targets.reference_freq_khz
    vb = guardband_voltage_for(table, f)
    base = power(params, OperatingPoint(vb, f), targets.savings_cores)
    cand = power(params, OperatingPoint(SUPPLY_MIN_MV, f), targets.savings_cores)
    return 1.0 - cand / base


@lru_cache(maxsize=8)
def default_params() -> DeviceModelParams:
    """Params calibrated against the datasheet table with default targets."""
    return calibrate(DATASHEET_GUARDBANDS, CalibrationTargets())
