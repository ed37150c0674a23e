"""Frame types, 16-bit image file I/O, and basic frame statistics.

Raw sensor frames are single-channel arrays of ADU counts in the 16-bit
range. The canonical on-disk container is binary PGM (P5) with
maxval 65535, samples big-endian; 16-bit grayscale PNG is accepted as a
second format. Display frames are 8-bit and use the same containers with
maxval 255 / bit depth 8.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

PGM_MAXVAL = 65535


class FrameFormatError(ValueError):
    """Malformed or unsupported image file."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    if arr.flags.writeable or not arr.flags.c_contiguous:
        arr = np.ascontiguousarray(arr).copy()
        arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class RawFrame:
    """Single-channel sensor frame of ADU counts in [0, 65535].

    Samples are stored row-major, so ``samples[y, x]`` is the pixel at
    column x of row y. File-loaded frames carry exact uint16 counts; the
    synthetic sensor emits float64 samples clamped (not rounded) to the
    16-bit range so that affine response models stay exact.
    """

    samples: np.ndarray
    frame_index: int = 0

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"frame must be a non-empty 2-D array, got shape {arr.shape}")
        if arr.dtype == np.uint16:
            pass
        else:
            arr = arr.astype(np.float64, copy=True)
            if not np.all(np.isfinite(arr)):
                raise ValueError("frame samples must be finite")
            if arr.min() < 0 or arr.max() > PGM_MAXVAL:
                raise ValueError("frame samples must lie in [0, 65535]")
        object.__setattr__(self, "samples", _freeze(arr))

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    def sample(self, x: int, y: int) -> float:
        return float(self.samples[y, x])


@dataclass(frozen=True)
class CorrectedFrame:
    """Real-valued corrected frame in ADU-equivalent units."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"frame must be a non-empty 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("corrected values must be finite")
        object.__setattr__(self, "values", _freeze(arr))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class DisplayFrame:
    """Display-ready 8-bit intensity frame."""

    bytes: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.bytes)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"frame must be a non-empty 2-D array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if np.any(arr < 0) or np.any(arr > 255):
                raise ValueError("display bytes must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        object.__setattr__(self, "bytes", _freeze(arr))

    @property
    def width(self) -> int:
        return self.bytes.shape[1]

    @property
    def height(self) -> int:
        return self.bytes.shape[0]


@dataclass(frozen=True)
class FrameStats:
    min: float
    max: float
    mean: float
    stddev: float


def frame_stats(frame: RawFrame | CorrectedFrame | np.ndarray) -> FrameStats:
    """Population statistics over all samples of a frame."""
    arr = _frame_array(frame)
    if arr.size == 0:
        raise ValueError("cannot compute statistics of an empty frame")
    arr = arr.astype(np.float64)
    # Population (ddof=0) variance: a frame is a complete population.
    return FrameStats(
        min=float(arr.min()),
        max=float(arr.max()),
        mean=float(arr.mean()),
        stddev=float(math.sqrt(np.mean((arr - arr.mean()) ** 2))),
    )


def _frame_array(frame) -> np.ndarray:
    if isinstance(frame, RawFrame):
        return frame.samples
    if isinstance(frame, CorrectedFrame):
        return frame.values
    if isinstance(frame, DisplayFrame):
        return frame.bytes
    return np.asarray(frame)


# ---------------------------------------------------------------------------
# PGM (P5) parsing and writing


def _parse_pgm_header(data: bytes, path: Path) -> tuple[int, int, int, int]:
    """Return (width, height, maxval, payload_offset)."""
    if data[:2] != b"P5":
        raise FrameFormatError(f"{path}: not a binary PGM (P5) file")
    pos = 2
    tokens: list[int] = []
    while len(tokens) < 3:
        if pos >= len(data):
            raise FrameFormatError(f"{path}: truncated PGM header")
        c = data[pos : pos + 1]
        if c in b" \t\r\n":
            pos += 1
        elif c == b"#":
            while pos < len(data) and data[pos : pos + 1] not in b"\r\n":
                pos += 1
        else:
            start = pos
            while pos < len(data) and data[pos : pos + 1] not in b" \t\r\n":
                pos += 1
            try:
                tokens.append(int(data[start:pos]))
            except ValueError:
                raise FrameFormatError(
                    f"{path}: non-numeric PGM header token {data[start:pos]!r}"
                ) from None
    # Exactly one whitespace byte separates the maxval from the payload.
    if pos >= len(data) or data[pos : pos + 1] not in b" \t\r\n":
        raise FrameFormatError(f"{path}: missing separator after PGM header")
    pos += 1
    width, height, maxval = tokens
    if width <= 0 or height <= 0:
        raise FrameFormatError(f"{path}: invalid dimensions {width}x{height}")
    return width, height, maxval, pos


def _load_pgm(path: Path, *, bits: int) -> np.ndarray:
    data = path.read_bytes()
    width, height, maxval, offset = _parse_pgm_header(data, path)
    if bits == 16:
        if maxval <= 255:
            raise FrameFormatError(f"{path}: unsupported bit depth (maxval {maxval}, expected 16-bit)")
        itemsize, dtype = 2, np.dtype(">u2")
    else:
        if maxval > 255:
            raise FrameFormatError(f"{path}: unsupported bit depth (maxval {maxval}, expected 8-bit)")
        itemsize, dtype = 1, np.dtype("u1")
    payload = data[offset:]
    expected = width * height * itemsize
    if len(payload) != expected:
        raise FrameFormatError(
            f"{path}: payload size mismatch (header promises {width}x{height}, "
            f"{expected} bytes, found {len(payload)})"
        )
    arr = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    return arr.astype(np.uint16 if bits == 16 else np.uint8)


def _store_pgm(arr: np.ndarray, path: Path, maxval: int) -> None:
    height, width = arr.shape
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    payload = arr.astype(">u2" if maxval > 255 else "u1").tobytes()
    path.write_bytes(header + payload)


# ---------------------------------------------------------------------------
# PNG via Pillow

_PNG_16_MODES = {"I;16", "I;16B", "I;16L", "I;16N", "I"}


def _load_png(path: Path, *, bits: int) -> np.ndarray:
    with Image.open(path) as img:
        mode = img.mode
        if bits == 16:
            if mode not in _PNG_16_MODES:
                raise FrameFormatError(
                    f"{path}: unsupported bit depth (PNG mode {mode!r}, expected 16-bit grayscale)"
                )
            arr = np.asarray(img, dtype=np.uint32)
            if arr.ndim != 2:
                raise FrameFormatError(f"{path}: expected single-channel PNG")
            if arr.max(initial=0) > PGM_MAXVAL:
                raise FrameFormatError(f"{path}: sample values exceed 16-bit range")
            return arr.astype(np.uint16)
        if mode != "L":
            raise FrameFormatError(
                f"{path}: unsupported bit depth (PNG mode {mode!r}, expected 8-bit grayscale)"
            )
        return np.asarray(img, dtype=np.uint8)


def _store_png(arr: np.ndarray, path: Path, *, bits: int) -> None:
    if bits == 16:
        height, width = arr.shape
        img = Image.frombytes("I;16", (width, height), arr.astype("<u2").tobytes())
        img.save(path, format="PNG")
    else:
        Image.fromarray(arr.astype(np.uint8), mode="L").save(path, format="PNG")


def _dispatch(path: Path):
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        return "pgm"
    if suffix == ".png":
        return "png"
    raise FrameFormatError(f"{path}: unsupported container {suffix!r} (expected .pgm or .png)")


def load_frame_16(path: str | Path, frame_index: int = 0) -> RawFrame:
    """Load a 16-bit grayscale frame, exact sample values, no rescaling."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such frame file: {path}")
    kind = _dispatch(path)
    arr = _load_pgm(path, bits=16) if kind == "pgm" else _load_png(path, bits=16)
    return RawFrame(samples=arr, frame_index=frame_index)


def store_frame_16(frame: RawFrame | np.ndarray, path: str | Path) -> None:
    """Write a 16-bit frame; real-valued samples are rounded half-to-even."""
    path = Path(path)
    arr = _frame_array(frame)
    arr = np.clip(np.round(arr), 0, PGM_MAXVAL).astype(np.uint16)
    kind = _dispatch(path)
    if kind == "pgm":
        _store_pgm(arr, path, PGM_MAXVAL)
    else:
        _store_png(arr, path, bits=16)


def load_frame_8(path: str | Path) -> DisplayFrame:
    """Load an 8-bit grayscale display frame."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such frame file: {path}")
    kind = _dispatch(path)
    arr = _load_pgm(path, bits=8) if kind == "pgm" else _load_png(path, bits=8)
    return DisplayFrame(bytes=arr)


def store_frame_8(frame: DisplayFrame, path: str | Path) -> None:
    """Write an 8-bit display frame; re-loading yields identical bytes."""
    path = Path(path)
    kind = _dispatch(path)
    if kind == "pgm":
        _store_pgm(frame.bytes, path, 255)
    else:
        _store_png(frame.bytes, path, bits=8)
