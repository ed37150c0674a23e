import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermopipe.bench import (
    BenchError,
    BenchReport,
    ThermalReading,
    ZoneLimits,
    compare_speedup,
    format_thermal_zones,
    measure_fps,
    parse_thermal_zones,
    report_from_timing,
    throttle_check,
)

# Snapshot mirroring the without-fan board monitor readout.
SNAPSHOT_NO_FAN = "A0-therm 65500\nCPU-therm 55000\nGPU-therm 52000\nPLL-therm 53500\n"


def test_published_fps_row_slow_board():
    report = report_from_timing(frame_count=402, total_time_ms=35_090.0)
    assert report.seconds_per_frame == pytest.approx(0.0873, abs=5e-5)
    assert report.fps_exact == pytest.approx(11.46, abs=5e-3)
    assert report.fps_rounded == 11


def test_published_fps_row_fast_board():
    report = report_from_timing(frame_count=402, total_time_ms=6_675.0)
    assert report.seconds_per_frame == pytest.approx(0.0166, abs=5e-5)
    assert report.fps_exact == pytest.approx(60.22, abs=5e-3)
    assert report.fps_rounded == 60


def test_one_frame_one_second():
    report = report_from_timing(frame_count=1, total_time_ms=1000.0)
    assert report.fps_exact == 1.0 and report.fps_rounded == 1


def test_rounding_convention():
    assert report_from_timing(1149, 100_000.0).fps_rounded == 11  # 11.49
    assert report_from_timing(6024, 100_000.0).fps_rounded == 60  # 60.24
    # Half-to-even at the boundary.
    assert report_from_timing(105, 10_000.0).fps_rounded == 10  # 10.5 -> 10
    assert report_from_timing(115, 10_000.0).fps_rounded == 12  # 11.5 -> 12


@settings(max_examples=50)
@given(
    frames=st.integers(1, 10_000),
    total_ms=st.floats(1.0, 1e7, allow_nan=False, allow_infinity=False),
)
def test_fps_arithmetic_identity(frames, total_ms):
    report = report_from_timing(frames, total_ms)
    assert report.fps_exact * (report.total_time_ms / 1000.0) == pytest.approx(
        frames, rel=1e-9
    )


def test_percentiles_monotone_enforced():
    with pytest.raises(ValueError, match="monotone"):
        BenchReport(
            frame_count=1,
            total_time_ms=10.0,
            seconds_per_frame=0.01,
            fps_exact=100.0,
            fps_rounded=100,
            latency_p50_ms=5.0,
            latency_p90_ms=4.0,
            latency_p99_ms=6.0,
        )


def test_measure_fps_sleep_runner_bound():
    d_ms = 4.0
    report = measure_fps(lambda _: time.sleep(d_ms / 1000.0), list(range(30)), warmup=2)
    assert d_ms <= report.seconds_per_frame * 1000.0 <= d_ms * 1.25
    assert d_ms <= report.latency_p50_ms <= d_ms * 1.25
    assert report.latency_p50_ms <= report.latency_p90_ms <= report.latency_p99_ms


def test_measure_fps_runs_warmup_untimed():
    calls = []
    report = measure_fps(lambda f: calls.append(f), [10, 20, 30], warmup=5)
    assert len(calls) == 8  # 5 warmup + 3 timed
    assert calls[:5] == [10, 20, 30, 10, 20]  # cycles over the input
    assert report.frame_count == 3


def test_measure_fps_empty_input():
    with pytest.raises(ValueError):
        measure_fps(lambda f: None, [])


def test_measure_fps_failure_carries_partial_report():
    def runner(frame):
        if frame == 2:
            raise RuntimeError("detector crashed")

    with pytest.raises(BenchError, match="frame 2") as exc_info:
        measure_fps(runner, [0, 1, 2, 3], warmup=0)
    partial = exc_info.value.partial
    assert partial is not None and partial.frame_count == 2


def test_speedup_in_published_band():
    optimized = report_from_timing(402, 35_090.0)  # ~11.46 fps
    baseline = report_from_timing(3, 1000.0)  # 3 fps
    ratio = compare_speedup(optimized, baseline)
    assert ratio == pytest.approx(3.82, abs=0.01)
    assert 2.5 <= ratio <= 4.5


def test_speedup_identical_reports_is_one():
    report = report_from_timing(100, 5000.0)
    assert compare_speedup(report, report) == 1.0


def test_speedup_60_vs_18():
    optimized = report_from_timing(600, 10_000.0)  # exactly 60 fps
    baseline = report_from_timing(180, 10_000.0)  # exactly 18 fps
    assert compare_speedup(optimized, baseline) == pytest.approx(10 / 3, rel=1e-12)


def test_speedup_zero_baseline_rejected():
    report = report_from_timing(100, 5000.0)
    bad = BenchReport(
        frame_count=1,
        total_time_ms=1.0,
        seconds_per_frame=1.0,
        fps_exact=0.0,
        fps_rounded=0,
        latency_p50_ms=1.0,
        latency_p90_ms=1.0,
        latency_p99_ms=1.0,
    )
    with pytest.raises(ValueError):
        compare_speedup(report, bad)


def test_report_json_round_trip():
    report = report_from_timing(402, 35_090.0, latencies_ms=[80.0] * 402)
    import json

    doc = json.loads(report.to_json())
    assert BenchReport.from_dict(doc) == report


# ---------------------------------------------------------------------------
# thermal zones


def test_parse_snapshot_without_fan():
    readings = parse_thermal_zones(SNAPSHOT_NO_FAN)
    assert [(r.zone, r.temperature_c) for r in readings] == [
        ("A0-therm", 65.5),
        ("CPU-therm", 55.0),
        ("GPU-therm", 52.0),
        ("PLL-therm", 53.5),
    ]


def test_parse_single_line_with_fan_value():
    (reading,) = parse_thermal_zones("CPU-therm 33000")
    assert reading.temperature_c == 33.0


def test_parse_malformed_line_reports_line_number():
    with pytest.raises(ValueError, match="line 1"):
        parse_thermal_zones("CPU-therm abc")
    with pytest.raises(ValueError, match="line 2"):
        parse_thermal_zones("CPU-therm 33000\njunk-line\n")


def test_parse_format_identity():
    readings = parse_thermal_zones(SNAPSHOT_NO_FAN)
    assert parse_thermal_zones(format_thermal_zones(readings)) == readings


def test_plausibility_band():
    assert ThermalReading("CPU", 45.0).plausible
    assert not ThermalReading("CPU", 400.0).plausible


def test_throttle_all_cool_is_ok():
    readings = parse_thermal_zones(
        "A0-therm 45500\nCPU-therm 33000\nGPU-therm 33000\nPLL-therm 33000"
    )
    status = throttle_check(readings, {"default": ZoneLimits(warn_c=70.0)})
    assert status.overall == "ok"
    assert not status.empty


def test_throttle_critical_at_89():
    readings = [ThermalReading("GPU", 90.0), ThermalReading("CPU", 50.0)]
    status = throttle_check(readings)
    assert status.per_zone == {"GPU": "critical", "CPU": "ok"}
    assert status.overall == "critical"
    assert throttle_check([ThermalReading("GPU", 89.0)]).overall == "critical"


def test_throttle_warn_band():
    status = throttle_check([ThermalReading("CPU", 75.0)])
    assert status.overall == "warn"


def test_throttle_empty_readings():
    status = throttle_check([])
    assert status.overall == "ok" and status.empty


def test_throttle_per_zone_limits_override_default():
    readings = [ThermalReading("GPU", 80.0)]
    limits = {"GPU": ZoneLimits(warn_c=60.0, critical_c=75.0)}
    assert throttle_check(readings, limits).overall == "critical"


def test_zone_limits_validated():
    with pytest.raises(ValueError):
        ZoneLimits(warn_c=95.0, critical_c=89.0)
