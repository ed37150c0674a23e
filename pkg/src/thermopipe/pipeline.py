"""Post-NUC correction chain: flat-field gain, bad pixels, temporal denoise, display.

Stage order is fixed: NUC -> gain/AGC -> bad-pixel scan+repair -> temporal
denoise -> display mapping. Toggles can disable stages but never reorder
them. Stateless stages are pure; the denoiser state and the bad-pixel
confirmation history belong to exactly one stream (single writer).
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .frames import CorrectedFrame, DisplayFrame, RawFrame
from .nuc import CalibrationSet, apply_nuc, load_calibration, save_calibration

BPR_THRESHOLD_ADU = 300.0
BPR_CONFIRM_FRAMES = 3
TD_WINDOW = 4

_OFFSETS8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


class PipelineError(RuntimeError):
    """Stage failure, annotated with the frame index where it happened."""


@dataclass(frozen=True)
class GainMap:
    """Flat-field multiplier map (scene mean over per-pixel average)."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("gain map must be 2-D")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ValueError("gain map entries must be finite and positive")
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class BadPixelMask:
    """Boolean defect map split by provenance (calibration vs runtime)."""

    calibration: np.ndarray
    runtime: np.ndarray

    def __post_init__(self) -> None:
        cal = np.asarray(self.calibration, dtype=bool)
        run = np.asarray(self.runtime, dtype=bool)
        if cal.shape != run.shape or cal.ndim != 2:
            raise ValueError("mask layers must be matching 2-D arrays")
        object.__setattr__(self, "calibration", cal)
        object.__setattr__(self, "runtime", run)

    @classmethod
    def empty(cls, width: int, height: int) -> "BadPixelMask":
        z = np.zeros((height, width), dtype=bool)
        return cls(calibration=z, runtime=z.copy())

    @classmethod
    def from_calibration(cls, bad_mask: np.ndarray) -> "BadPixelMask":
        bad = np.asarray(bad_mask, dtype=bool)
        return cls(calibration=bad.copy(), runtime=np.zeros_like(bad))

    @property
    def combined(self) -> np.ndarray:
        return self.calibration | self.runtime

    @property
    def bad_fraction(self) -> float:
        return float(self.combined.mean())

    def count(self) -> int:
        return int(self.combined.sum())


@dataclass(frozen=True)
class AgcParams:
    low_percentile: float = 1.0
    high_percentile: float = 99.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.low_percentile < self.high_percentile <= 100.0):
            raise ValueError(
                f"percentiles must satisfy 0 <= low < high <= 100, "
                f"got ({self.low_percentile}, {self.high_percentile})"
            )


def build_gain_map(uniform_frames: Sequence[CorrectedFrame]) -> GainMap:
    """Flat-field map from uniform-scene frames: scene_mean(avg) / avg per pixel.

    More frames average away temporal noise, so the residual nonuniformity
    of the map shrinks like 1/sqrt(K).
    """
    frames = list(uniform_frames)
    if not frames:
        raise ValueError("need at least one uniform frame to build a gain map")
    acc = np.zeros_like(frames[0].values)
    for f in frames:
        if f.values.shape != acc.shape:
            raise ValueError("gain map frames must share one geometry")
        acc += f.values
    avg = acc / len(frames)
    if np.any(avg == 0):
        raise ValueError("gain map undefined: a pixel averages to zero")
    return GainMap(values=float(avg.mean()) / avg)


def apply_gain_map(frame: CorrectedFrame, gain_map: GainMap) -> CorrectedFrame:
    if frame.values.shape != gain_map.values.shape:
        raise ValueError("gain map geometry does not match frame")
    return CorrectedFrame(values=frame.values * gain_map.values)


def agc_display(frame: CorrectedFrame, params: AgcParams) -> DisplayFrame:
    """Percentile stretch onto [0, 255], clamped, round-half-to-even.

    A degenerate frame (low and high percentiles equal) maps to mid-gray
    128 by contract.
    """
    v = frame.values
    p_low, p_high = np.percentile(v, [params.low_percentile, params.high_percentile])
    if p_high == p_low:
        return DisplayFrame(bytes=np.full(v.shape, 128, dtype=np.uint8))
    t = np.clip((v - p_low) / (p_high - p_low), 0.0, 1.0)
    return DisplayFrame(bytes=np.round(t * 255.0).astype(np.uint8))


def _nan_padded(values: np.ndarray, bad: np.ndarray) -> np.ndarray:
    """Frame with bad pixels and a 1-pixel border replaced by NaN."""
    h, w = values.shape
    padded = np.full((h + 2, w + 2), np.nan)
    padded[1:-1, 1:-1] = np.where(bad, np.nan, values)
    return padded


def _valid_neighbor_medians(
    padded: np.ndarray, ys: np.ndarray, xs: np.ndarray
) -> np.ndarray:
    """Exact median of valid 8-neighbors at the given pixels; NaN if none.

    Median of an even count is the mean of the two middle values.
    """
    rows = np.stack(
        [padded[ys + 1 + dy, xs + 1 + dx] for dy, dx in _OFFSETS8], axis=1
    )
    rows = np.sort(rows, axis=1)  # NaNs sort to the end
    counts = (~np.isnan(rows)).sum(axis=1)
    lo_idx = np.maximum(counts - 1, 0) // 2
    hi_idx = counts // 2  # counts == 0 indexes a NaN slot, yielding NaN
    hi_idx = np.minimum(hi_idx, rows.shape[1] - 1)
    lo = np.take_along_axis(rows, lo_idx[:, None], axis=1)[:, 0]
    hi = np.take_along_axis(rows, hi_idx[:, None], axis=1)[:, 0]
    return 0.5 * (lo + hi)


def scan_bad_pixels(
    frame: CorrectedFrame,
    mask: BadPixelMask,
    threshold: float,
    history: np.ndarray,
    confirm: int = BPR_CONFIRM_FRAMES,
) -> BadPixelMask:
    """Track pixels deviating from their valid-8-neighbor median.

    A pixel whose deviation exceeds ``threshold`` for ``confirm``
    consecutive frames is added as runtime-detected. Existing entries are
    never removed. ``history`` is the per-pixel consecutive-deviation
    counter, updated in place (one stream, one owner).
    """
    values = frame.values
    bad = mask.combined
    if values.shape != bad.shape or values.shape != history.shape:
        raise ValueError("frame, mask and history geometries must match")
    h, w = values.shape
    padded = _nan_padded(values, bad)
    # The median of the valid neighbors lies within their min/max, so only
    # pixels past the min/max by more than the threshold can deviate; the
    # exact median is then evaluated just at those candidates.
    mn = np.full((h, w), np.nan)
    mx = np.full((h, w), np.nan)
    for dy, dx in _OFFSETS8:
        view = padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        mn = np.fmin(mn, view)
        mx = np.fmax(mx, view)
    with np.errstate(invalid="ignore"):
        candidates = ~bad & (
            (values > mn + threshold) | (values < mx - threshold)
        )
    deviates = np.zeros_like(bad)
    if candidates.any():
        ys, xs = np.nonzero(candidates)
        med = _valid_neighbor_medians(padded, ys, xs)
        with np.errstate(invalid="ignore"):
            deviates[ys, xs] = np.abs(values[ys, xs] - med) > threshold
    history[:] = np.where(deviates, history + 1, 0)
    runtime = mask.runtime | (history >= confirm)
    return BadPixelMask(calibration=mask.calibration, runtime=runtime)


def repair_bad_pixels(frame: CorrectedFrame, mask: BadPixelMask) -> CorrectedFrame:
    """Replace each bad pixel with the median of its non-bad 8-neighbors.

    Falls back to the 5x5 ring when the whole 8-neighborhood is bad.
    Repairs read only original good-pixel values, so the operation is
    idempotent for a fixed mask and leaves good pixels bit-identical.
    """
    bad = mask.combined
    if frame.values.shape != bad.shape:
        raise ValueError("mask geometry does not match frame")
    if not bad.any():
        return frame
    src = frame.values
    out = src.copy()
    h, w = src.shape
    for y, x in zip(*np.nonzero(bad)):
        donors = [
            src[y + dy, x + dx]
            for dy, dx in _OFFSETS8
            if 0 <= y + dy < h and 0 <= x + dx < w and not bad[y + dy, x + dx]
        ]
        if not donors:
            donors = [
                src[y + dy, x + dx]
                for dy in range(-2, 3)
                for dx in range(-2, 3)
                if max(abs(dy), abs(dx)) == 2
                and 0 <= y + dy < h
                and 0 <= x + dx < w
                and not bad[y + dy, x + dx]
            ]
        if not donors:
            raise PipelineError(
                f"bad pixel ({x}, {y}) has no good donor within its 5x5 "
                "neighborhood; mask is over-saturated"
            )
        out[y, x] = float(np.median(donors))
    return CorrectedFrame(values=out)


class TemporalDenoiser:
    """Streaming temporal noise filter: windowed mean or exponential smoothing.

    Windowed mode outputs the per-pixel mean of the last ``min(n_seen, N)``
    frames; exponential mode keeps ``acc = alpha*frame + (1-alpha)*acc``
    with the accumulator initialized to the first frame.
    """

    def __init__(self, mode: str = "windowed", window: int = TD_WINDOW, alpha: float = 0.5):
        if mode not in ("windowed", "exponential"):
            raise ValueError(f"unknown temporal denoise mode {mode!r}")
        if mode == "windowed" and window < 1:
            raise ValueError("window must be >= 1")
        if mode == "exponential" and not 0.0 < alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        self.mode = mode
        self.window = window
        self.alpha = alpha
        self.n_seen = 0
        self._ring: deque[np.ndarray] = deque(maxlen=window)
        self._acc: np.ndarray | None = None
        self._shape: tuple[int, int] | None = None

    def step(self, frame: CorrectedFrame) -> CorrectedFrame:
        values = frame.values
        if self._shape is None:
            self._shape = values.shape
        elif values.shape != self._shape:
            raise ValueError(
                f"frame geometry changed mid-stream: {self._shape} -> {values.shape}"
            )
        self.n_seen += 1
        if self.mode == "windowed":
            self._ring.append(values)
            return CorrectedFrame(values=np.stack(self._ring).mean(axis=0))
        if self._acc is None:
            self._acc = values.astype(np.float64)
        else:
            self._acc = self.alpha * values + (1.0 - self.alpha) * self._acc
        return CorrectedFrame(values=self._acc)


# ---------------------------------------------------------------------------
# Pipeline configuration and the full per-frame chain.


@dataclass(frozen=True)
class BprConfig:
    threshold: float = BPR_THRESHOLD_ADU
    confirm: int = BPR_CONFIRM_FRAMES

    def __post_init__(self) -> None:
        if self.threshold <= 0 or self.confirm < 1:
            raise ValueError("bad-pixel threshold must be positive, confirm >= 1")


@dataclass(frozen=True)
class TdConfig:
    mode: str = "windowed"
    window: int = TD_WINDOW
    alpha: float = 0.5

    def make_denoiser(self) -> TemporalDenoiser:
        return TemporalDenoiser(mode=self.mode, window=self.window, alpha=self.alpha)


@dataclass(frozen=True)
class StageToggles:
    nuc: bool = True
    gain: bool = True
    bpr: bool = True
    td: bool = True


@dataclass(frozen=True)
class PipelineConfig:
    calibration: CalibrationSet
    agc: AgcParams = field(default_factory=AgcParams)
    bpr: BprConfig = field(default_factory=BprConfig)
    td: TdConfig = field(default_factory=TdConfig)
    stages: StageToggles = field(default_factory=StageToggles)
    gain_map: GainMap | None = None


def run_pipeline(
    config: PipelineConfig, frames: Iterable[RawFrame]
) -> Iterator[tuple[CorrectedFrame, DisplayFrame]]:
    """Run the fixed correction chain over an ordered frame stream.

    Yields one (corrected, display) pair per input frame, in order. Stage
    errors are re-raised as PipelineError with the frame index attached.
    """
    cal = config.calibration
    mask = BadPixelMask.from_calibration(cal.bad_mask)
    history = np.zeros((cal.height, cal.width), dtype=np.int32)
    denoiser = config.td.make_denoiser()
    for raw in frames:
        try:
            if config.stages.nuc:
                corrected = apply_nuc(cal, raw)
            else:
                corrected = CorrectedFrame(values=raw.samples.astype(np.float64))
            if config.stages.gain and config.gain_map is not None:
                corrected = apply_gain_map(corrected, config.gain_map)
            if config.stages.bpr:
                mask = scan_bad_pixels(
                    corrected, mask, config.bpr.threshold, history, config.bpr.confirm
                )
                corrected = repair_bad_pixels(corrected, mask)
            if config.stages.td:
                corrected = denoiser.step(corrected)
            display = agc_display(corrected, config.agc)
        except Exception as exc:
            raise PipelineError(f"frame {raw.frame_index}: {exc}") from exc
        yield corrected, display


# ---------------------------------------------------------------------------
# JSON serialization. The gain map travels as a .npy sidecar since it is a
# dense float array; the calibration keeps its own JSON+binary format.


def save_pipeline_config(
    config: PipelineConfig,
    path: str | Path,
    calibration_path: str | Path,
    gain_map_path: str | Path | None = None,
) -> None:
    path = Path(path)
    calibration_path = Path(calibration_path)
    save_calibration(config.calibration, calibration_path)
    doc = {
        "calibration": calibration_path.name
        if calibration_path.parent == path.parent
        else str(calibration_path),
        "agc": {
            "low_percentile": config.agc.low_percentile,
            "high_percentile": config.agc.high_percentile,
        },
        "bpr": {"threshold": config.bpr.threshold, "confirm": config.bpr.confirm},
        "td": {"mode": config.td.mode, "window": config.td.window, "alpha": config.td.alpha},
        "stages": {
            "nuc": config.stages.nuc,
            "gain": config.stages.gain,
            "bpr": config.stages.bpr,
            "td": config.stages.td,
        },
        "gain_map": None,
    }
    if config.gain_map is not None:
        gain_map_path = Path(gain_map_path or path.with_suffix(".gainmap.npy"))
        np.save(gain_map_path, config.gain_map.values)
        doc["gain_map"] = (
            gain_map_path.name
            if gain_map_path.parent == path.parent
            else str(gain_map_path)
        )
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_pipeline_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    cal_path = Path(doc["calibration"])
    if not cal_path.is_absolute():
        cal_path = path.parent / cal_path
    gain_map = None
    if doc.get("gain_map"):
        gm_path = Path(doc["gain_map"])
        if not gm_path.is_absolute():
            gm_path = path.parent / gm_path
        gain_map = GainMap(values=np.load(gm_path))
    return PipelineConfig(
        calibration=load_calibration(cal_path),
        agc=AgcParams(**doc["agc"]),
        bpr=BprConfig(**doc["bpr"]),
        td=TdConfig(**doc["td"]),
        stages=StageToggles(**doc["stages"]),
        gain_map=gain_map,
    )
