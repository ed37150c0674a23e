import numpy as np
import pytest

from thermopipe.dataset import GroundTruthBox
from thermopipe.frames import frame_stats
from thermopipe.synth import (
    BadPixel,
    SceneObject,
    SensorTruth,
    base_response,
    make_sensor,
    scene_frame,
    uniform_frame,
)


def ideal_sensor(width=8, height=6, **kwargs):
    return make_sensor(
        seed=0, width=width, height=height, gain_range=(1.0, 1.0),
        offset_range=(0.0, 0.0), **kwargs,
    )


def test_base_response_is_linear():
    assert base_response(0.0) == 1000.0
    assert base_response(40.0) == 3000.0
    with pytest.raises(ValueError):
        base_response(75.0)


def test_ideal_sensor_noiseless_uniform():
    frame = uniform_frame(ideal_sensor(), 40.0)
    assert np.all(frame.samples == 3000.0)


def test_same_seed_identical_sensor():
    a = make_sensor(seed=11, width=16, height=12, bad_count=5, noise_sigma=3.0)
    b = make_sensor(seed=11, width=16, height=12, bad_count=5, noise_sigma=3.0)
    assert np.array_equal(a.gain_truth, b.gain_truth)
    assert np.array_equal(a.offset_truth, b.offset_truth)
    assert a.bad_pixels == b.bad_pixels


def test_same_seed_identical_frames():
    sensor = make_sensor(seed=11, width=16, height=12, noise_sigma=10.0)
    f1 = uniform_frame(sensor, 30.0, frame_index=4)
    f2 = uniform_frame(sensor, 30.0, frame_index=4)
    assert np.array_equal(f1.samples, f2.samples)
    f3 = uniform_frame(sensor, 30.0, frame_index=5)
    assert not np.array_equal(f1.samples, f3.samples)


def test_bad_pixel_count_and_distinct_positions():
    sensor = make_sensor(seed=2, width=32, height=24, bad_count=20)
    assert len(sensor.bad_pixels) == 20
    assert len({(bp.x, bp.y) for bp in sensor.bad_pixels}) == 20


def test_bad_count_must_fit():
    with pytest.raises(ValueError):
        make_sensor(seed=0, width=4, height=4, bad_count=16)


def test_stuck_pixels_override_response():
    sensor = SensorTruth(
        gain_truth=np.ones((4, 4)),
        offset_truth=np.zeros((4, 4)),
        bad_pixels=(BadPixel(1, 2, "stuck-high"), BadPixel(0, 0, "stuck-low")),
        noise_sigma=0.0,
        seed=0,
    )
    for temp in (10.0, 50.0):
        frame = uniform_frame(sensor, temp)
        assert frame.samples[2, 1] == 65535.0
        assert frame.samples[0, 0] == 0.0


def test_erratic_pixel_changes_between_frames():
    sensor = SensorTruth(
        gain_truth=np.ones((4, 4)),
        offset_truth=np.zeros((4, 4)),
        bad_pixels=(BadPixel(1, 1, "erratic"),),
        noise_sigma=0.0,
        seed=3,
    )
    values = {uniform_frame(sensor, 30.0, frame_index=i).samples[1, 1] for i in range(5)}
    assert len(values) > 1


def test_noise_sigma_monte_carlo():
    sensor = make_sensor(
        seed=9, width=640, height=480, gain_range=(1.0, 1.0),
        offset_range=(0.0, 0.0), noise_sigma=20.0,
    )
    stats = frame_stats(uniform_frame(sensor, 30.0))
    assert 18.0 <= stats.stddev <= 22.0


def test_affine_oracle_exactness():
    sensor = make_sensor(seed=5, width=12, height=10, noise_sigma=0.0)
    frame = uniform_frame(sensor, 33.0)
    expected = base_response(33.0) * sensor.gain_truth + sensor.offset_truth
    assert np.array_equal(frame.samples, np.clip(expected, 0, 65535))


def test_temperature_domain_enforced():
    with pytest.raises(ValueError):
        uniform_frame(ideal_sensor(), 70.0)


def test_scene_with_no_objects_reduces_to_uniform():
    sensor = ideal_sensor()
    frame, truths = scene_frame(sensor, [], background_temperature=25.0)
    assert truths == ()
    assert np.array_equal(frame.samples, uniform_frame(sensor, 25.0).samples)


def test_scene_echoes_truth_boxes():
    box = GroundTruthBox(3, 0.5, 0.5, 0.25, 0.25)
    frame, truths = scene_frame(
        ideal_sensor(width=16, height=16),
        [SceneObject(box=box, apparent_temperature=40.0)],
        background_temperature=20.0,
    )
    assert truths == (box,)
    assert frame.samples[8, 8] == base_response(40.0)
    assert frame.samples[0, 0] == base_response(20.0)


def test_scene_painter_order_keeps_both_truths():
    hot = SceneObject(GroundTruthBox(0, 0.5, 0.5, 0.5, 0.5), 50.0)
    cool = SceneObject(GroundTruthBox(1, 0.5, 0.5, 0.25, 0.25), 30.0)
    frame, truths = scene_frame(
        ideal_sensor(width=16, height=16), [hot, cool], background_temperature=20.0
    )
    assert len(truths) == 2
    # The later, smaller object overwrites the overlap region.
    assert frame.samples[8, 8] == base_response(30.0)
    assert frame.samples[5, 5] == base_response(50.0)
