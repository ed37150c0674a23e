"""Synthetic thermal sensor and scene generator with known ground truth.

The sensor model is affine per pixel: ``adu(T) = base_response(T) * gain + offset``
with ``base_response(T) = 1000 + 50 * T`` ADU over scene temperatures in
[0, 60] degrees C, optional i.i.d. Gaussian temporal noise, and injected bad
pixels (stuck-high, stuck-low, or erratic). Because the model is affine and
frames are clamped without rounding, a two-point calibration built from the
sensor's own reference stacks flattens uniform scenes exactly (up to float
arithmetic) -- which is what makes this module usable as a verification
oracle for the calibration and correction stages.

All randomness comes from counter-based Philox generators keyed by
``(seed, stream)``: stream 2**63 derives the sensor maps, stream k the
frame with index k. Identical seeds therefore reproduce identical sensors
and frames bit-for-bit, on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import GroundTruthBox
from .frames import RawFrame

BASE_OFFSET_ADU = 1000.0
ADU_PER_DEGREE = 50.0
TEMPERATURE_DOMAIN = (0.0, 60.0)
ADU_MAX = 65535.0

FAILURE_MODES = ("stuck-high", "stuck-low", "erratic")

_SENSOR_STREAM = 2**63


def base_response(temperature_c: float) -> float:
    """Ideal-pixel response in ADU, linear in scene temperature."""
    lo, hi = TEMPERATURE_DOMAIN
    if not lo <= temperature_c <= hi:
        raise ValueError(
            f"scene temperature {temperature_c} outside response domain [{lo}, {hi}]"
        )
    return BASE_OFFSET_ADU + ADU_PER_DEGREE * temperature_c


def _stream(seed: int, stream: int) -> np.random.Generator:
    key = np.array([np.uint64(seed), np.uint64(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class BadPixel:
    x: int
    y: int
    mode: str

    def __post_init__(self) -> None:
        if self.mode not in FAILURE_MODES:
            raise ValueError(f"unknown failure mode {self.mode!r}")


@dataclass(frozen=True)
class SensorTruth:
    """Ground-truth nonuniformity of a synthetic focal plane array."""

    gain_truth: np.ndarray
    offset_truth: np.ndarray
    bad_pixels: tuple[BadPixel, ...]
    noise_sigma: float
    seed: int

    def __post_init__(self) -> None:
        gain = np.asarray(self.gain_truth, dtype=np.float64)
        offset = np.asarray(self.offset_truth, dtype=np.float64)
        if gain.shape != offset.shape or gain.ndim != 2:
            raise ValueError("gain and offset truth maps must be matching 2-D arrays")
        if np.any(gain <= 0):
            raise ValueError("gain truth must be positive everywhere")
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be non-negative")
        for bp in self.bad_pixels:
            if not (0 <= bp.x < gain.shape[1] and 0 <= bp.y < gain.shape[0]):
                raise ValueError(f"bad pixel ({bp.x}, {bp.y}) outside geometry")
        object.__setattr__(self, "gain_truth", gain)
        object.__setattr__(self, "offset_truth", offset)
        object.__setattr__(self, "bad_pixels", tuple(self.bad_pixels))

    @property
    def width(self) -> int:
        return self.gain_truth.shape[1]

    @property
    def height(self) -> int:
        return self.gain_truth.shape[0]

    def without_noise(self) -> "SensorTruth":
        """Noiseless clone; used to probe calibration residuals in isolation."""
        return SensorTruth(
            gain_truth=self.gain_truth,
            offset_truth=self.offset_truth,
            bad_pixels=self.bad_pixels,
            noise_sigma=0.0,
            seed=self.seed,
        )


@dataclass(frozen=True)
class SceneObject:
    """A warm or cool rectangular patch with its annotation ground truth."""

    box: GroundTruthBox
    apparent_temperature: float


def make_sensor(
    seed: int,
    width: int = 640,
    height: int = 480,
    gain_range: tuple[float, float] = (0.8, 1.2),
    offset_range: tuple[float, float] = (-200.0, 200.0),
    bad_count: int = 0,
    noise_sigma: float = 0.0,
    failure_modes: Sequence[str] = FAILURE_MODES,
) -> SensorTruth:
    """Draw a deterministic sensor: gains/offsets uniform in range, distinct bad pixels."""
    if gain_range[0] <= 0 or gain_range[1] < gain_range[0]:
        raise ValueError(f"invalid gain range {gain_range}")
    if offset_range[1] < offset_range[0]:
        raise ValueError(f"invalid offset range {offset_range}")
    if bad_count >= width * height:
        raise ValueError("bad pixel count must be smaller than the pixel count")
    for mode in failure_modes:
        if mode not in FAILURE_MODES:
            raise ValueError(f"unknown failure mode {mode!r}")
    rng = _stream(seed, _SENSOR_STREAM)
    gain = rng.uniform(gain_range[0], gain_range[1], size=(height, width))
    offset = rng.uniform(offset_range[0], offset_range[1], size=(height, width))
    flat = rng.choice(width * height, size=bad_count, replace=False)
    modes = rng.choice(list(failure_modes), size=bad_count)
    bad = tuple(
        BadPixel(x=int(i % width), y=int(i // width), mode=str(m))
        for i, m in zip(flat, modes)
    )
    return SensorTruth(
        gain_truth=gain,
        offset_truth=offset,
        bad_pixels=bad,
        noise_sigma=noise_sigma,
        seed=seed,
    )


def _render(sensor: SensorTruth, temperature_field: np.ndarray, frame_index: int) -> RawFrame:
    values = temperature_field * ADU_PER_DEGREE + BASE_OFFSET_ADU
    values = values * sensor.gain_truth + sensor.offset_truth
    rng = _stream(sensor.seed, frame_index)
    if sensor.noise_sigma > 0:
        values = values + rng.normal(0.0, sensor.noise_sigma, size=values.shape)
    for bp in sensor.bad_pixels:
        if bp.mode == "stuck-high":
            values[bp.y, bp.x] = ADU_MAX
        elif bp.mode == "stuck-low":
            values[bp.y, bp.x] = 0.0
        else:  # erratic: fresh draw every frame
            values[bp.y, bp.x] = rng.uniform(0.0, ADU_MAX)
    values = np.clip(values, 0.0, ADU_MAX)
    return RawFrame(samples=values, frame_index=frame_index)


def uniform_frame(sensor: SensorTruth, scene_temperature: float, frame_index: int = 0) -> RawFrame:
    """One frame of a blackbody-style uniform scene at the given temperature."""
    lo, hi = TEMPERATURE_DOMAIN
    if not lo <= scene_temperature <= hi:
        raise ValueError(
            f"scene temperature {scene_temperature} outside response domain [{lo}, {hi}]"
        )
    field_ = np.full((sensor.height, sensor.width), float(scene_temperature))
    return _render(sensor, field_, frame_index)


def reference_stack_frames(
    sensor: SensorTruth, scene_temperature: float, count: int, first_index: int = 0
) -> list[RawFrame]:
    """A stack of uniform-scene frames with consecutive frame indices."""
    return [
        uniform_frame(sensor, scene_temperature, first_index + k) for k in range(count)
    ]


def scene_frame(
    sensor: SensorTruth,
    objects: Sequence[SceneObject],
    background_temperature: float = 20.0,
    frame_index: int = 0,
) -> tuple[RawFrame, tuple[GroundTruthBox, ...]]:
    """Render rectangular patches over a uniform background.

    Objects are painted in order (later objects overwrite overlapping
    pixels); the returned ground truths echo the input boxes exactly.
    """
    lo, hi = TEMPERATURE_DOMAIN
    if not lo <= background_temperature <= hi:
        raise ValueError(f"background temperature {background_temperature} out of domain")
    field_ = np.full((sensor.height, sensor.width), float(background_temperature))
    w, h = sensor.width, sensor.height
    for obj in objects:
        if not lo <= obj.apparent_temperature <= hi:
            raise ValueError(
                f"object temperature {obj.apparent_temperature} out of domain"
            )
        box = obj.box
        x0 = max(0, int(round((box.cx - box.w / 2) * w)))
        x1 = min(w, int(round((box.cx + box.w / 2) * w)))
        y0 = max(0, int(round((box.cy - box.h / 2) * h)))
        y1 = min(h, int(round((box.cy + box.h / 2) * h)))
        field_[y0:y1, x0:x1] = obj.apparent_temperature
    frame = _render(sensor, field_, frame_index)
    return frame, tuple(obj.box for obj in objects)
