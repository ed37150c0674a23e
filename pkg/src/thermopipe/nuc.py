"""Shutterless two-point non-uniformity calibration.

Two uniform blackbody reference stacks at known cold/hot temperatures
parameterize a per-pixel affine correction. With ``R_i(T)`` the per-pixel
mean response across a stack and ``M(T)`` the robust scene-wide mean of
that map, each pixel gets

    gain_i   = (M(hot) - M(cold)) / (R_i(hot) - R_i(cold))
    offset_i = M(cold) - gain_i * R_i(cold)

so that corrected responses of every live pixel agree at both reference
temperatures. Pixels with a dead response delta or an out-of-bounds gain
are flagged bad and given the identity correction; they are repaired
downstream, not here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .frames import CorrectedFrame, RawFrame, frame_stats

DEAD_RESPONSE_THRESHOLD = 2.0  # ADU between the two reference responses
GAIN_BOUNDS = (0.2, 5.0)
MAX_BAD_FRACTION = 0.05
TRIM_PERCENT = 1.0  # robust scene mean keeps the middle 98% by response


class CalibrationError(ValueError):
    """Reference stacks cannot produce a usable calibration."""


@dataclass(frozen=True)
class UniformityScore:
    """Spatial coefficient of variation (stddev / mean); 0 iff constant."""

    score: float


@dataclass(frozen=True)
class ReferenceStack:
    frames: tuple[RawFrame, ...]
    nominal_temperature: float

    def __post_init__(self) -> None:
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("reference stack needs at least one frame")
        w, h = frames[0].width, frames[0].height
        for f in frames:
            if (f.width, f.height) != (w, h):
                raise ValueError("reference stack frames must share one geometry")
        object.__setattr__(self, "frames", frames)

    def pixel_means(self) -> np.ndarray:
        """Per-pixel mean across the stack (temporal average)."""
        acc = np.zeros((self.frames[0].height, self.frames[0].width))
        for f in self.frames:
            acc += f.samples.astype(np.float64)
        return acc / len(self.frames)


@dataclass(frozen=True)
class CalibrationSet:
    """Per-pixel gain/offset maps plus the bad-pixel mask they imply."""

    gain: np.ndarray
    offset: np.ndarray
    bad_mask: np.ndarray
    t_cold: float
    t_hot: float
    target_cold: float
    target_hot: float
    dead_response_threshold: float = DEAD_RESPONSE_THRESHOLD
    gain_min: float = GAIN_BOUNDS[0]
    gain_max: float = GAIN_BOUNDS[1]
    max_bad_fraction: float = MAX_BAD_FRACTION

    def __post_init__(self) -> None:
        gain = np.asarray(self.gain, dtype=np.float64)
        offset = np.asarray(self.offset, dtype=np.float64)
        bad = np.asarray(self.bad_mask, dtype=bool)
        if not (gain.shape == offset.shape == bad.shape) or gain.ndim != 2:
            raise ValueError("calibration maps must be matching 2-D arrays")
        if not np.all(np.isfinite(gain)) or not np.all(np.isfinite(offset)):
            raise ValueError("calibration maps must be finite")
        if np.any(gain[~bad] <= 0):
            raise ValueError("gain must be positive on live pixels")
        if not self.t_cold < self.t_hot:
            raise ValueError("t_cold must be below t_hot")
        object.__setattr__(self, "gain", gain)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "bad_mask", bad)

    @property
    def width(self) -> int:
        return self.gain.shape[1]

    @property
    def height(self) -> int:
        return self.gain.shape[0]

    @property
    def bad_fraction(self) -> float:
        return float(self.bad_mask.mean())

    @classmethod
    def identity(cls, width: int, height: int, t_cold: float = 20.0, t_hot: float = 40.0):
        """Pass-through calibration (gain 1, offset 0, no bad pixels)."""
        shape = (height, width)
        return cls(
            gain=np.ones(shape),
            offset=np.zeros(shape),
            bad_mask=np.zeros(shape, dtype=bool),
            t_cold=t_cold,
            t_hot=t_hot,
            target_cold=0.0,
            target_hot=0.0,
        )


def uniformity_score(frame: RawFrame) -> UniformityScore:
    """Spatial stddev over mean; the reference-selection criterion."""
    stats = frame_stats(frame)
    if stats.mean <= 0:
        raise ValueError("uniformity score undefined for a zero-mean frame")
    return UniformityScore(score=stats.stddev / stats.mean)


def select_references(stack: Sequence[RawFrame], count: int) -> list[RawFrame]:
    """Keep the ``count`` most uniform frames, preserving original order.

    Ties on score go to the lower frame_index.
    """
    frames = list(stack)
    if not frames:
        raise ValueError("cannot select from an empty stack")
    if count > len(frames):
        raise ValueError(f"cannot select {count} frames from a stack of {len(frames)}")
    scored = sorted(
        range(len(frames)),
        key=lambda i: (uniformity_score(frames[i]).score, frames[i].frame_index, i),
    )
    chosen = sorted(scored[:count])
    return [frames[i] for i in chosen]


def robust_scene_mean(pixel_means: np.ndarray, trim_percent: float = TRIM_PERCENT) -> float:
    """Scene mean over the middle (100 - 2*trim)% of responses."""
    lo, hi = np.percentile(pixel_means, [trim_percent, 100.0 - trim_percent])
    sel = pixel_means[(pixel_means >= lo) & (pixel_means <= hi)]
    return float(sel.mean())


def build_two_point(
    cold: ReferenceStack,
    hot: ReferenceStack,
    dead_response_threshold: float = DEAD_RESPONSE_THRESHOLD,
    gain_bounds: tuple[float, float] = GAIN_BOUNDS,
    max_bad_fraction: float = MAX_BAD_FRACTION,
) -> CalibrationSet:
    """Solve the per-pixel 2x2 affine system from two reference stacks."""
    if cold.nominal_temperature >= hot.nominal_temperature:
        raise CalibrationError(
            f"cold reference ({cold.nominal_temperature} C) must be below "
            f"hot reference ({hot.nominal_temperature} C)"
        )
    r_cold = cold.pixel_means()
    r_hot = hot.pixel_means()
    if r_cold.shape != r_hot.shape:
        raise CalibrationError(
            f"reference geometry mismatch: {r_cold.shape} vs {r_hot.shape}"
        )
    m_cold = robust_scene_mean(r_cold)
    m_hot = robust_scene_mean(r_hot)
    delta = r_hot - r_cold
    dead = np.abs(delta) < dead_response_threshold
    safe_delta = np.where(dead, 1.0, delta)
    gain = (m_hot - m_cold) / safe_delta
    gain_min, gain_max = gain_bounds
    bad = dead | (gain < gain_min) | (gain > gain_max)
    fraction = float(bad.mean())
    if fraction > max_bad_fraction:
        raise CalibrationError(
            f"{fraction:.1%} of pixels flagged bad (limit {max_bad_fraction:.1%}); "
            "reference stacks look invalid"
        )
    offset = m_cold - gain * r_cold
    gain = np.where(bad, 1.0, gain)
    offset = np.where(bad, 0.0, offset)
    return CalibrationSet(
        gain=gain,
        offset=offset,
        bad_mask=bad,
        t_cold=cold.nominal_temperature,
        t_hot=hot.nominal_temperature,
        target_cold=m_cold,
        target_hot=m_hot,
        dead_response_threshold=dead_response_threshold,
        gain_min=gain_min,
        gain_max=gain_max,
        max_bad_fraction=max_bad_fraction,
    )


def apply_nuc(cal: CalibrationSet, raw: RawFrame) -> CorrectedFrame:
    """Per-pixel affine correction; bad pixels pass raw through untouched."""
    if (raw.height, raw.width) != (cal.height, cal.width):
        raise ValueError(
            f"frame geometry {raw.width}x{raw.height} does not match "
            f"calibration {cal.width}x{cal.height}"
        )
    samples = raw.samples.astype(np.float64)
    corrected = cal.gain * samples + cal.offset
    values = np.where(cal.bad_mask, samples, corrected)
    return CorrectedFrame(values=values)


# ---------------------------------------------------------------------------
# Persistence: JSON header + little-endian float64 sidecar, packed-bit mask.


def save_calibration(cal: CalibrationSet, json_path: str | Path) -> None:
    json_path = Path(json_path)
    sidecar = json_path.with_suffix(".bin")
    header = {
        "width": cal.width,
        "height": cal.height,
        "t_cold": cal.t_cold,
        "t_hot": cal.t_hot,
        "target_cold": cal.target_cold,
        "target_hot": cal.target_hot,
        "dead_response_threshold": cal.dead_response_threshold,
        "gain_min": cal.gain_min,
        "gain_max": cal.gain_max,
        "max_bad_fraction": cal.max_bad_fraction,
        "sidecar": sidecar.name,
        "layout": ["gain:<f8", "offset:<f8", "bad_mask:packbits"],
    }
    payload = (
        cal.gain.astype("<f8").tobytes()
        + cal.offset.astype("<f8").tobytes()
        + np.packbits(cal.bad_mask).tobytes()
    )
    json_path.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    sidecar.write_bytes(payload)


def load_calibration(json_path: str | Path) -> CalibrationSet:
    json_path = Path(json_path)
    header = json.loads(json_path.read_text(encoding="utf-8"))
    width, height = int(header["width"]), int(header["height"])
    count = width * height
    payload = (json_path.parent / header["sidecar"]).read_bytes()
    map_bytes = count * 8
    mask_bytes = (count + 7) // 8
    if len(payload) != 2 * map_bytes + mask_bytes:
        raise CalibrationError(
            f"{json_path}: sidecar payload size mismatch "
            f"(expected {2 * map_bytes + mask_bytes} bytes, found {len(payload)})"
        )
    gain = np.frombuffer(payload[:map_bytes], dtype="<f8").reshape(height, width)
    offset = np.frombuffer(payload[map_bytes : 2 * map_bytes], dtype="<f8").reshape(height, width)
    bad = np.unpackbits(np.frombuffer(payload[2 * map_bytes :], dtype=np.uint8))[:count]
    return CalibrationSet(
        gain=gain,
        offset=offset,
        bad_mask=bad.reshape(height, width).astype(bool),
        t_cold=float(header["t_cold"]),
        t_hot=float(header["t_hot"]),
        target_cold=float(header["target_cold"]),
        target_hot=float(header["target_hot"]),
        dead_response_threshold=float(header["dead_response_threshold"]),
        gain_min=float(header["gain_min"]),
        gain_max=float(header["gain_max"]),
        max_bad_fraction=float(header["max_bad_fraction"]),
    )
