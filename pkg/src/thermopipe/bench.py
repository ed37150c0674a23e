"""Throughput and latency measurement plus thermal-zone monitoring.

FPS derives from wall time of a strictly sequential timed loop on a
monotonic clock: seconds_per_frame = total / frames, fps = 1 /
seconds_per_frame. Warm-up frames run first and stay out of the timing.
Thermal snapshots are text lines of ``<zone-name> <millidegrees>`` as the
board kernels expose them; the "overall" reading some boards publish is
its own sensor, never an aggregate computed here.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

log = logging.getLogger("thermopipe.bench")

DEFAULT_WARMUP = 5
DEFAULT_WARN_C = 70.0
DEFAULT_CRITICAL_C = 89.0
PLAUSIBLE_BAND_C = (-40.0, 150.0)

SEVERITIES = ("ok", "warn", "critical")


class BenchError(RuntimeError):
    """Benchmark run failed; carries the partial report if any frames finished."""

    def __init__(self, message: str, partial: "BenchReport | None" = None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class BenchReport:
    frame_count: int
    total_time_ms: float
    seconds_per_frame: float
    fps_exact: float
    fps_rounded: int
    latency_p50_ms: float
    latency_p90_ms: float
    latency_p99_ms: float
    speedup_vs_baseline: float | None = None

    def __post_init__(self) -> None:
        if self.frame_count < 1 or self.total_time_ms <= 0:
            raise ValueError("report needs >= 1 frame and positive total time")
        if not self.latency_p50_ms <= self.latency_p90_ms <= self.latency_p99_ms:
            raise ValueError("latency percentiles must be monotone p50 <= p90 <= p99")

    def to_dict(self) -> dict:
        return {
            "frame_count": self.frame_count,
            "total_time_ms": self.total_time_ms,
            "seconds_per_frame": self.seconds_per_frame,
            "fps_exact": self.fps_exact,
            "fps_rounded": self.fps_rounded,
            "latency_ms": {
                "p50": self.latency_p50_ms,
                "p90": self.latency_p90_ms,
                "p99": self.latency_p99_ms,
            },
            "speedup_vs_baseline": self.speedup_vs_baseline,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "BenchReport":
        lat = doc.get("latency_ms", {})
        return cls(
            frame_count=int(doc["frame_count"]),
            total_time_ms=float(doc["total_time_ms"]),
            seconds_per_frame=float(doc["seconds_per_frame"]),
            fps_exact=float(doc["fps_exact"]),
            fps_rounded=int(doc["fps_rounded"]),
            latency_p50_ms=float(lat.get("p50", 0.0)),
            latency_p90_ms=float(lat.get("p90", 0.0)),
            latency_p99_ms=float(lat.get("p99", 0.0)),
            speedup_vs_baseline=doc.get("speedup_vs_baseline"),
        )


def report_from_timing(
    frame_count: int,
    total_time_ms: float,
    latencies_ms: Sequence[float] | None = None,
) -> BenchReport:
    """Derive every FPS field from a frame count and a wall time.

    fps_exact * total_time_s == frame_count holds by construction;
    fps_rounded uses round-half-to-even.
    """
    if frame_count < 1:
        raise ValueError("frame count must be >= 1")
    if total_time_ms <= 0:
        raise ValueError("total time must be positive")
    seconds = total_time_ms / 1000.0
    fps_exact = frame_count / seconds
    if latencies_ms is None or len(latencies_ms) == 0:
        per_frame = total_time_ms / frame_count
        p50 = p90 = p99 = per_frame
    else:
        p50, p90, p99 = (float(v) for v in np.percentile(latencies_ms, [50, 90, 99]))
    return BenchReport(
        frame_count=frame_count,
        total_time_ms=total_time_ms,
        seconds_per_frame=seconds / frame_count,
        fps_exact=fps_exact,
        fps_rounded=round(fps_exact),
        latency_p50_ms=p50,
        latency_p90_ms=p90,
        latency_p99_ms=p99,
    )


def measure_fps(
    runner: Callable[[object], object],
    frames: Sequence,
    warmup: int = DEFAULT_WARMUP,
    clock: Callable[[], float] = time.perf_counter,
) -> BenchReport:
    """Time ``runner`` over ``frames`` sequentially on a monotonic clock.

    Warm-up calls (default 5, cycling over the input) run first, untimed.
    Per-frame latencies wrap the runner call only; frame loading must
    happen before this function is called.
    """
    frames = list(frames)
    if not frames:
        raise ValueError("need at least one frame to benchmark")
    for i in range(warmup):
        runner(frames[i % len(frames)])
    latencies_ms: list[float] = []
    start = clock()
    for i, frame in enumerate(frames):
        t0 = clock()
        try:
            runner(frame)
        except Exception as exc:
            partial = None
            if latencies_ms:
                partial = report_from_timing(
                    len(latencies_ms), (clock() - start) * 1000.0, latencies_ms
                )
            raise BenchError(f"runner failed on frame {i}: {exc}", partial) from exc
        latencies_ms.append((clock() - t0) * 1000.0)
    total_ms = (clock() - start) * 1000.0
    return report_from_timing(len(frames), total_ms, latencies_ms)


def compare_speedup(optimized: BenchReport, baseline: BenchReport) -> float:
    """FPS ratio of an optimized run over its baseline."""
    if baseline.fps_exact <= 0:
        raise ValueError("baseline fps must be positive")
    return optimized.fps_exact / baseline.fps_exact


# ---------------------------------------------------------------------------
# Thermal zones


@dataclass(frozen=True)
class ThermalReading:
    zone: str
    temperature_c: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.temperature_c):
            raise ValueError(f"zone {self.zone}: temperature must be finite")

    @property
    def plausible(self) -> bool:
        lo, hi = PLAUSIBLE_BAND_C
        return lo <= self.temperature_c <= hi


def parse_thermal_zones(text: str) -> list[ThermalReading]:
    """Parse ``<zone-name> <millidegrees-integer>`` lines into readings."""
    readings: list[ThermalReading] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ValueError(
                f"thermal snapshot line {lineno}: expected '<zone> <millidegrees>', got {line!r}"
            )
        try:
            milli = int(fields[1])
        except ValueError:
            raise ValueError(
                f"thermal snapshot line {lineno}: non-integer millidegrees {fields[1]!r}"
            ) from None
        reading = ThermalReading(zone=fields[0], temperature_c=milli / 1000.0)
        if not reading.plausible:
            log.warning(
                "zone %s reads %.2f C, outside the plausible band %s",
                reading.zone, reading.temperature_c, PLAUSIBLE_BAND_C,
            )
        readings.append(reading)
    return readings


def format_thermal_zones(readings: Sequence[ThermalReading]) -> str:
    return "".join(f"{r.zone} {round(r.temperature_c * 1000)}\n" for r in readings)


@dataclass(frozen=True)
class ZoneLimits:
    warn_c: float = DEFAULT_WARN_C
    critical_c: float = DEFAULT_CRITICAL_C

    def __post_init__(self) -> None:
        if self.warn_c > self.critical_c:
            raise ValueError("warn limit must not exceed critical limit")

    def classify(self, temperature_c: float) -> str:
        if temperature_c >= self.critical_c:
            return "critical"
        if temperature_c >= self.warn_c:
            return "warn"
        return "ok"


@dataclass(frozen=True)
class ThrottleStatus:
    per_zone: dict[str, str]
    overall: str
    empty: bool = False

    def to_dict(self) -> dict:
        return {"per_zone": self.per_zone, "overall": self.overall, "empty": self.empty}


def throttle_check(
    readings: Sequence[ThermalReading],
    limits: Mapping[str, ZoneLimits] | None = None,
) -> ThrottleStatus:
    """Classify each zone against its limits; overall is the worst zone."""
    limits = limits or {}
    default = limits.get("default", ZoneLimits())
    per_zone: dict[str, str] = {}
    worst = 0
    for reading in readings:
        zone_limits = limits.get(reading.zone, default)
        status = zone_limits.classify(reading.temperature_c)
        per_zone[reading.zone] = status
        worst = max(worst, SEVERITIES.index(status))
    if not readings:
        return ThrottleStatus(per_zone={}, overall="ok", empty=True)
    return ThrottleStatus(per_zone=per_zone, overall=SEVERITIES[worst])
