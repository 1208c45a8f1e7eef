"""The two standard campaign figures.

Both builders return a matplotlib Figure so tests can inspect the
artists; the plot_* wrappers save to a path and close the figure. All
frequency axes are in MHz and energy in millijoules. The renderer is
forced to the Agg backend: figures are files, never windows.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .readers import EnergyPoint, SchemaMismatch, SummaryRow

ERROR_COLOR = "#d1495b"
LOCKUP_COLOR = "#30638e"
GUARDBAND_COLOR = "#555555"
BOX_OFFSET = 0.18
BOX_WIDTH = 0.28


def _bxp_stats(quantiles_khz: dict[int, int]) -> dict:
    q = {level: khz / 1000.0 for level, khz in quantiles_khz.items()}
    return {
        "whislo": q[5],
        "q1": q[25],
        "med": q[50],
        "q3": q[75],
        "whishi": q[95],
        "fliers": [],
    }


def build_failure_distribution(rows: list[SummaryRow]):
    """Per-voltage error and lockup distributions over the guardband line.

    Each voltage gets a pair of quantile boxes (p5/p25/p50/p75/p95 as
    whisker-box-median); a kind never observed at a voltage is marked
    with an open diamond at the guardband frequency instead of a box.
    """
    if not rows:
        raise SchemaMismatch("summary has no voltage rows")
    rows = sorted(rows, key=lambda r: r.voltage_mv)
    fig, ax = plt.subplots(figsize=(7.2, 4.4))
    positions = range(len(rows))

    def draw_side(offset, color, label, quantiles_of):
        boxes, box_positions = [], []
        absent_x, absent_y = [], []
        for x, row in zip(positions, rows):
            quantiles = quantiles_of(row)
            if quantiles is None:
                absent_x.append(x + offset)
                absent_y.append(row.cluster_guardband_khz / 1000.0)
            else:
                boxes.append(_bxp_stats(quantiles))
                box_positions.append(x + offset)
        if boxes:
            ax.bxp(
                boxes,
                positions=box_positions,
                widths=BOX_WIDTH,
                patch_artist=True,
                boxprops={"facecolor": color, "alpha": 0.55},
                medianprops={"color": "black"},
                label=label,
            )
        if absent_x:
            ax.plot(
                absent_x,
                absent_y,
                linestyle="none",
                marker="D",
                markerfacecolor="none",
                markeredgecolor=color,
                markersize=8,
                label=f"{label}: not observed",
            )

    draw_side(-BOX_OFFSET, ERROR_COLOR, "errors", lambda r: r.error_quantiles_khz)
    draw_side(+BOX_OFFSET, LOCKUP_COLOR, "lockups", lambda r: r.lockup_quantiles_khz)

    ax.plot(
        list(positions),
        [r.cluster_guardband_khz / 1000.0 for r in rows],
        drawstyle="steps-mid",
        color=GUARDBAND_COLOR,
        linestyle="--",
        linewidth=1.4,
        label="datasheet guardband",
    )

    ax.set_xticks(list(positions))
    ax.set_xticklabels([f"{r.voltage_mv} mV" for r in rows])
    ax.set_xlabel("supply voltage")
    ax.set_ylabel("cluster frequency [MHz]")
    ax.set_title("Failure distribution per supply step")
    ax.legend(loc="upper left")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    return fig


def build_energy_curves(points: list[EnergyPoint]):
    """One energy-vs-frequency curve per voltage.

    Error-free grid points draw as a solid line with filled markers;
    points where the device failed continue the curve dotted with open
    markers, so the usable region is visible at a glance.
    """
    freqs = {p.freq_khz for p in points}
    if len(freqs) < 2:
        raise SchemaMismatch(
            f"energy grid spans {len(freqs)} frequency, need at least 2"
        )
    by_voltage: dict[int, list[EnergyPoint]] = {}
    for p in points:
        by_voltage.setdefault(p.voltage_mv, []).append(p)

    fig, ax = plt.subplots(figsize=(7.2, 4.4))
    cmap = plt.get_cmap("viridis")
    voltages = sorted(by_voltage)
    span = max(len(voltages) - 1, 1)
    flagged_violating = False
    for i, v in enumerate(voltages):
        color = cmap(0.15 + 0.7 * i / span)
        series = sorted(by_voltage[v], key=lambda p: p.freq_khz)
        clean = [p for p in series if p.error_free]
        failing = [p for p in series if not p.error_free]
        ax.plot(
            [p.freq_khz / 1000.0 for p in clean],
            [p.energy_j * 1000.0 for p in clean],
            color=color,
            marker="o",
            markersize=3,
            label=f"{v} mV",
        )
        if failing:
            ax.plot(
                [p.freq_khz / 1000.0 for p in failing],
                [p.energy_j * 1000.0 for p in failing],
                color=color,
                linestyle=":",
                marker="o",
                markersize=4,
                markerfacecolor="none",
                label="beyond error-free region" if not flagged_violating else None,
            )
            flagged_violating = True

    ax.set_xlabel("cluster frequency [MHz]")
    ax.set_ylabel("workload energy [mJ]")
    ax.set_title("Energy per workload execution")
    ax.legend(loc="upper right")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return fig


def _save(fig, output_path) -> None:
    fig.savefig(output_path, metadata=_stable_metadata(str(output_path)))
    plt.close(fig)


def _stable_metadata(path: str) -> dict | None:
    # SVG embeds a creation date by default, which would make repeated
    # renders of identical inputs differ; pin it out. Other formats
    # reject the key, so only SVG gets it.
    return {"Date": None} if path.endswith(".svg") else None


def plot_failure_distribution(rows: list[SummaryRow], output_path) -> None:
    _save(build_failure_distribution(rows), output_path)


def plot_energy_curves(points: list[EnergyPoint], output_path) -> None:
    _save(build_energy_curves(points), output_path)
