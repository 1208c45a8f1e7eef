"""Shunt-monitor trace ingestion: CSV in, average power over the
triggered window out.

Traces arrive as CSV with header "timestamp_us,current_ma,bus_mv" and
optional marker rows "TRIG,START" / "TRIG,END" bracketing the samples
that belong to the measurement window.  Averaging uses trapezoidal
weighting so non-uniform sample spacing is handled exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isfinite
from typing import Iterable

from .errors import EmptyWindow, NonMonotonicTimestamps

_HEADER = "timestamp_us,current_ma,bus_mv"


@dataclass(frozen=True)
class PowerSample:
    timestamp_us: int
    current_ma: float
    bus_mv: float


@dataclass(frozen=True)
class PowerTrace:
    """Ordered samples plus the trigger window as sample indices.

    window_start/window_end are half-open index bounds into samples;
    None means the trace edge (an untriggered bench capture).
    """

    samples: tuple[PowerSample, ...]
    window_start: int | None = None
    window_end: int | None = None

    def __post_init__(self) -> None:
        ts = [s.timestamp_us for s in self.samples]
        for a, b in zip(ts, ts[1:]):
            if b <= a:
                raise NonMonotonicTimestamps(
                    f"timestamps must strictly increase, got {a} then {b}"
                )
        if (
            self.window_start is not None
            and self.window_end is not None
            and self.window_end < self.window_start
        ):
            raise ValueError("trigger start must precede trigger end")

    def window_samples(self) -> tuple[PowerSample, ...]:
        lo = 0 if self.window_start is None else self.window_start
        hi = len(self.samples) if self.window_end is None else self.window_end
        return self.samples[lo:hi]


def parse_power_trace(chunks: Iterable[str]) -> PowerTrace:
    """Parse trace CSV from text chunks with arbitrary boundaries.

    Chunk boundaries carry no meaning: re-chunking the same character
    stream yields the same trace.  The first line must be the header;
    TRIG rows may appear anywhere between data rows.
    """
    buffer = ""
    lines: list[str] = []
    for chunk in chunks:
        buffer += chunk
        while "\n" in buffer:
            line, buffer = buffer.split("\n", 1)
            lines.append(line)
    if buffer:
        lines.append(buffer)

    samples: list[PowerSample] = []
    window_start: int | None = None
    window_end: int | None = None
    saw_header = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not saw_header:
            if line != _HEADER:
                raise ValueError(
                    f"line {lineno}: expected header {_HEADER!r}, got {line!r}"
                )
            saw_header = True
            continue
        if line.startswith("TRIG,"):
            marker = line[5:]
            if marker == "START":
                window_start = len(samples)
            elif marker == "END":
                window_end = len(samples)
            else:
                raise ValueError(f"line {lineno}: unknown trigger marker {line!r}")
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 3 fields, got {len(parts)}")
        try:
            sample = PowerSample(
                timestamp_us=int(parts[0]),
                current_ma=float(parts[1]),
                bus_mv=float(parts[2]),
            )
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        samples.append(sample)
    if not saw_header:
        raise ValueError("empty trace: header row missing")
    return PowerTrace(
        samples=tuple(samples), window_start=window_start, window_end=window_end
    )


def ingest_power_trace(trace: PowerTrace, shunt_supply_mv: float) -> float:
    """Time-averaged power in watts over the trigger window.

    Integrand per sample is current_ma/1000 * bus_mv/1000; a sample
    whose bus reading is missing (non-finite or non-positive) falls back
    to shunt_supply_mv.  Trapezoidal integration over the window, then
    division by the window span.
    """
    inside = trace.window_samples()
    if len(inside) < 2:
        raise EmptyWindow(
            f"need at least 2 samples in the trigger window, got {len(inside)}"
        )

    def level(s: PowerSample) -> float:
        mv = s.bus_mv if isfinite(s.bus_mv) and s.bus_mv > 0 else shunt_supply_mv
        return (s.current_ma / 1e3) * (mv / 1e3)

    total = 0.0
    for a, b in zip(inside, inside[1:]):
        dt = (b.timestamp_us - a.timestamp_us) / 1e6
        total += 0.5 * (level(a) + level(b)) * dt
    span = (inside[-1].timestamp_us - inside[0].timestamp_us) / 1e6
    return total / span
