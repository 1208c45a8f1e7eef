"""How much energy does undervolting save at the same speed?

The guardband table forces 1.2 V for a 170 MHz cluster clock, but the
calibrated device runs correctly at 170 MHz all the way down at 1.0 V.
This demo sweeps the energy grid for the eight-core workload and
reduces it to iso-performance savings: same frequency, lower voltage,
27% less energy at the 170 MHz point.

    python3 demos/02_energy_savings.py
"""

from marginlab import (
    DATASHEET_GUARDBANDS,
    DEFAULT_ENERGY_WORKLOAD,
    SimulatedBackend,
    default_params,
    energy_sweep,
    error_free_max_freq,
    iso_performance_savings,
)


def main():
    params = default_params()
    backend = SimulatedBackend(params)

    voltages = (1000, 1050, 1100, 1150, 1200)
    freqs = tuple(range(80_000, 200_001, 2_000))
    print(
        f"Sweeping {len(voltages)} x {len(freqs)} grid points with the"
        f" {DEFAULT_ENERGY_WORKLOAD.n_cores}-core workload ..."
    )
    records = energy_sweep(backend, DEFAULT_ENERGY_WORKLOAD, voltages, freqs)

    print()
    print("Highest error-free frequency per supply step")
    for v in voltages:
        top = error_free_max_freq(records, v)
        print(f"  {v} mV: {top / 1000:.0f} MHz" if top else f"  {v} mV: none")

    print()
    print("Energy at 170 MHz across supply steps (one workload execution)")
    for r in records:
        if r.op.freq_khz == 170_000:
            marker = "" if r.error_free else "  <- failing"
            print(f"  {r.op.voltage_mv} mV: {r.energy_j * 1000:7.3f} mJ{marker}")

    report = iso_performance_savings(records, DATASHEET_GUARDBANDS)
    best = max(report.rows, key=lambda row: row.savings)
    print()
    print(
        f"Best iso-performance point: {best.freq_khz / 1000:.0f} MHz at"
        f" {best.candidate_voltage_mv} mV instead of the guardbanded"
        f" {best.baseline_voltage_mv} mV"
    )
    print(
        f"  {best.baseline_energy_j * 1000:.3f} mJ -> "
        f"{best.candidate_energy_j * 1000:.3f} mJ, saving {best.savings:.1%}"
    )


if __name__ == "__main__":
    main()
