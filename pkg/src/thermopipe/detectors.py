"""Pluggable detector contract, inference strategies, and NMS fusion.

Two detector kinds ship here: a deterministic stub (seeded perturbation of
ground truth, or canned responses) for desk-scale testing, and an adapter
that talks to an external detector process over line-delimited JSON on
stdin/stdout. Strategies -- plain single-pass (NA), test-time augmentation
(TTA), and model ensembling -- pool detections and fuse them with
per-class greedy NMS.

Adapter wire protocol (one request line -> one response line):
    request:  {"id": "<str>", "image": "<abs path>", "conf_threshold": <num>}
    response: {"id": "<same>", "detections": [{"class_id": int, "cx": num,
               "cy": num, "w": num, "h": num, "confidence": num}, ...]}
Anything else the child wants to say must go to stderr.
"""

from __future__ import annotations

import hashlib
import json
import os
import select
import subprocess
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np

from .dataset import GroundTruthBox
from .metrics import iou

DEFAULT_FUSION_IOU = 0.45
DEFAULT_ADAPTER_TIMEOUT = 30.0

_MIN_BOX_SIZE = 1e-6


class DetectorError(RuntimeError):
    """Base class for detector and strategy failures."""


class AdapterSpawnError(DetectorError):
    """External adapter process could not be started."""


class AdapterTimeoutError(DetectorError):
    """External adapter did not answer within the configured timeout."""


class AdapterProtocolError(DetectorError):
    """External adapter violated the wire protocol or box invariants."""


@dataclass(frozen=True)
class Detection:
    """Normalized center-format box with class and confidence."""

    class_id: int
    cx: float
    cy: float
    w: float
    h: float
    confidence: float

    def __post_init__(self) -> None:
        if self.class_id < 0:
            raise ValueError(f"class_id must be non-negative, got {self.class_id}")
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0):
            raise ValueError(f"box center ({self.cx}, {self.cy}) outside [0, 1]")
        if not (0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise ValueError(f"box size ({self.w}, {self.h}) outside (0, 1]")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class ImageRef:
    """What a detector gets to see: an id, optionally a file, optionally truths.

    Stub detectors read the ground truths; external adapters read the file.
    """

    image_id: str
    path: Path | None = None
    truths: tuple[GroundTruthBox, ...] = ()


class Detector(Protocol):
    name: str

    def detect(self, image: ImageRef, conf_threshold: float) -> list[Detection]: ...


# ---------------------------------------------------------------------------
# Deterministic stub detector


@dataclass(frozen=True)
class StubSpec:
    """Perturbation rule over ground truth, or a canned id->detections map."""

    seed: int = 0
    drop_rate: float = 0.0
    jitter: float = 0.0
    confidence: tuple[float, float] = (0.9, 0.9)
    canned: Mapping[str, tuple[Detection, ...]] | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.drop_rate <= 1.0:
            raise ValueError("drop rate must lie in [0, 1]")
        if self.jitter < 0:
            raise ValueError("jitter must be non-negative")
        lo, hi = self.confidence
        if not (0.0 <= lo <= hi <= 1.0):
            raise ValueError("confidence range must satisfy 0 <= lo <= hi <= 1")


def _image_stream(seed: int, image_id: str) -> np.random.Generator:
    # Philox keyed by (seed, stable 64-bit digest of the image id): the stub
    # must give the same answer for the same image in every process.
    digest = hashlib.blake2b(image_id.encode("utf-8"), digest_size=8).digest()
    key = np.array(
        [np.uint64(seed), np.uint64(int.from_bytes(digest, "big"))], dtype=np.uint64
    )
    return np.random.Generator(np.random.Philox(key=key))


class StubDetector:
    """Deterministic test double: perturbs the reference boxes it is shown."""

    def __init__(self, spec: StubSpec, name: str = "stub"):
        self.spec = spec
        self.name = name

    def detect(self, image: ImageRef, conf_threshold: float) -> list[Detection]:
        spec = self.spec
        if spec.canned is not None:
            return [
                d for d in spec.canned.get(image.image_id, ()) if d.confidence >= conf_threshold
            ]
        rng = _image_stream(spec.seed, image.image_id)
        out: list[Detection] = []
        for truth in image.truths:
            if rng.uniform() < spec.drop_rate:
                continue
            cx, cy, w, h = truth.cx, truth.cy, truth.w, truth.h
            if spec.jitter > 0:
                dcx, dcy, dw, dh = rng.normal(0.0, spec.jitter, size=4)
                cx = float(np.clip(cx + dcx, 0.0, 1.0))
                cy = float(np.clip(cy + dcy, 0.0, 1.0))
                w = float(np.clip(w + dw, _MIN_BOX_SIZE, 1.0))
                h = float(np.clip(h + dh, _MIN_BOX_SIZE, 1.0))
            lo, hi = spec.confidence
            conf = lo if lo == hi else float(rng.uniform(lo, hi))
            if conf >= conf_threshold:
                out.append(Detection(truth.class_id, cx, cy, w, h, conf))
        return out


# ---------------------------------------------------------------------------
# External adapter over line-delimited JSON


@dataclass(frozen=True)
class ExternalSpec:
    command: tuple[str, ...]
    cwd: Path | None = None
    timeout: float = DEFAULT_ADAPTER_TIMEOUT

    def __post_init__(self) -> None:
        if not self.command:
            raise ValueError("adapter command must not be empty")
        if self.timeout <= 0:
            raise ValueError("adapter timeout must be positive")
        object.__setattr__(self, "command", tuple(self.command))


class ExternalDetector:
    """One adapter process, one in-flight request at a time."""

    def __init__(self, spec: ExternalSpec, name: str | None = None):
        self.spec = spec
        self.name = name or Path(spec.command[0]).name
        self._proc: subprocess.Popen | None = None
        self._stderr_path: Path | None = None
        self._buf = b""
        self._next_id = 0

    def _ensure_started(self) -> subprocess.Popen:
        if self._proc is not None and self._proc.poll() is None:
            return self._proc
        if self._proc is not None:
            raise AdapterProtocolError(
                f"{self.name}: adapter exited with code {self._proc.returncode}"
                + self._stderr_tail()
            )
        stderr_fd, stderr_path = tempfile.mkstemp(prefix="adapter-stderr-")
        self._stderr_path = Path(stderr_path)
        try:
            self._proc = subprocess.Popen(
                list(self.spec.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=stderr_fd,
                cwd=self.spec.cwd,
            )
        except OSError as exc:
            raise AdapterSpawnError(f"{self.name}: cannot spawn adapter: {exc}") from exc
        finally:
            os.close(stderr_fd)
        return self._proc

    def _stderr_tail(self, limit: int = 2000) -> str:
        if self._stderr_path is None or not self._stderr_path.exists():
            return ""
        text = self._stderr_path.read_text(encoding="utf-8", errors="replace")[-limit:]
        return f"; adapter stderr: {text!r}" if text else ""

    def _read_line(self, deadline: float) -> bytes:
        proc = self._proc
        assert proc is not None and proc.stdout is not None
        fd = proc.stdout.fileno()
        while b"\n" not in self._buf:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                self.close()
                raise AdapterTimeoutError(
                    f"{self.name}: no response within {self.spec.timeout} s" + self._stderr_tail()
                )
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                continue
            chunk = os.read(fd, 65536)
            if not chunk:
                code = proc.poll()
                raise AdapterProtocolError(
                    f"{self.name}: adapter closed stdout (exit code {code})" + self._stderr_tail()
                )
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return line

    def detect(self, image: ImageRef, conf_threshold: float) -> list[Detection]:
        if image.path is None:
            raise ValueError("external detector needs an image path")
        proc = self._ensure_started()
        request_id = f"req-{self._next_id}"
        self._next_id += 1
        request = {
            "id": request_id,
            "image": str(Path(image.path).resolve()),
            "conf_threshold": conf_threshold,
        }
        try:
            assert proc.stdin is not None
            proc.stdin.write((json.dumps(request) + "\n").encode("utf-8"))
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise AdapterProtocolError(
                f"{self.name}: adapter pipe closed: {exc}" + self._stderr_tail()
            ) from exc
        line = self._read_line(time.monotonic() + self.spec.timeout)
        try:
            response = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise AdapterProtocolError(
                f"{self.name}: malformed response line {line[:200]!r}: {exc}" + self._stderr_tail()
            ) from exc
        if not isinstance(response, dict) or response.get("id") != request_id:
            raise AdapterProtocolError(
                f"{self.name}: response id {response.get('id') if isinstance(response, dict) else None!r} "
                f"does not match request id {request_id!r}"
            )
        raw = response.get("detections")
        if not isinstance(raw, list):
            raise AdapterProtocolError(f"{self.name}: response lacks a detections list")
        detections = []
        for i, item in enumerate(raw):
            try:
                detections.append(
                    Detection(
                        class_id=int(item["class_id"]),
                        cx=float(item["cx"]),
                        cy=float(item["cy"]),
                        w=float(item["w"]),
                        h=float(item["h"]),
                        confidence=float(item["confidence"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise AdapterProtocolError(
                    f"{self.name}: detection {i} fails validation: {exc}"
                ) from exc
        return detections

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            try:
                if self._proc.stdin is not None:
                    self._proc.stdin.close()
                self._proc.wait(timeout=2.0)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()
                self._proc.wait()
        if self._stderr_path is not None and self._stderr_path.exists():
            try:
                self._stderr_path.unlink()
            except OSError:
                pass
            self._stderr_path = None

    def __enter__(self) -> "ExternalDetector":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


# ---------------------------------------------------------------------------
# NMS fusion


def nms(dets: Sequence[Detection], iou_threshold: float) -> list[Detection]:
    """Per-class greedy suppression of overlapping duplicates.

    Within a class, the highest-confidence box wins and suppresses boxes
    with IoU strictly above the threshold; ties break on (confidence desc,
    smaller cx, smaller cy). Output is sorted by confidence descending.
    """
    kept_all: list[Detection] = []
    by_class: dict[int, list[Detection]] = {}
    for d in dets:
        by_class.setdefault(d.class_id, []).append(d)
    for class_id in sorted(by_class):
        candidates = sorted(by_class[class_id], key=lambda d: (-d.confidence, d.cx, d.cy))
        kept: list[Detection] = []
        for cand in candidates:
            if all(iou(cand, k) <= iou_threshold for k in kept):
                kept.append(cand)
        kept_all.extend(kept)
    return sorted(kept_all, key=lambda d: (-d.confidence, d.cx, d.cy, d.class_id))


# ---------------------------------------------------------------------------
# Test-time augmentations


@dataclass(frozen=True)
class Augmentation:
    """Invertible box-space view transform: identity, horizontal flip, or scale."""

    kind: str
    factor: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("identity", "hflip", "scale"):
            raise ValueError(f"unknown augmentation {self.kind!r}")
        if self.kind == "scale" and self.factor <= 0:
            raise ValueError("scale factor must be positive (the transform must invert)")

    @property
    def label(self) -> str:
        return self.kind if self.kind != "scale" else f"scale{self.factor:g}"

    def apply_box(self, box: GroundTruthBox) -> GroundTruthBox | None:
        """Map a ground-truth box into the augmented view; None if it leaves it."""
        if self.kind == "identity":
            return box
        if self.kind == "hflip":
            return GroundTruthBox(box.class_id, 1.0 - box.cx, box.cy, box.w, box.h)
        s = self.factor
        cx, cy = box.cx * s, box.cy * s
        if cx > 1.0 or cy > 1.0:
            return None
        return GroundTruthBox(box.class_id, cx, cy, min(box.w * s, 1.0), min(box.h * s, 1.0))

    def invert_detection(self, det: Detection) -> Detection:
        """Map a detection from the augmented view back to the original frame."""
        if self.kind == "identity":
            return det
        if self.kind == "hflip":
            return Detection(det.class_id, 1.0 - det.cx, det.cy, det.w, det.h, det.confidence)
        s = self.factor
        return Detection(
            det.class_id,
            float(np.clip(det.cx / s, 0.0, 1.0)),
            float(np.clip(det.cy / s, 0.0, 1.0)),
            float(np.clip(det.w / s, _MIN_BOX_SIZE, 1.0)),
            float(np.clip(det.h / s, _MIN_BOX_SIZE, 1.0)),
            det.confidence,
        )

    def apply_image(self, arr: np.ndarray) -> np.ndarray:
        if self.kind == "identity":
            return arr
        if self.kind == "hflip":
            return arr[:, ::-1]
        from PIL import Image

        h, w = arr.shape
        s = self.factor
        img = Image.fromarray(arr.astype(np.float32), mode="F")
        resized = np.asarray(
            img.resize((max(1, round(w * s)), max(1, round(h * s))), Image.BILINEAR),
            dtype=np.float64,
        )
        out = np.zeros((h, w), dtype=np.float64)
        out[: min(h, resized.shape[0]), : min(w, resized.shape[1])] = resized[
            : min(h, resized.shape[0]), : min(w, resized.shape[1])
        ]
        return out


IDENTITY = Augmentation("identity")
HFLIP = Augmentation("hflip")


def scale(factor: float) -> Augmentation:
    return Augmentation("scale", factor)


DEFAULT_TTA_AUGMENTATIONS = (IDENTITY, HFLIP, scale(0.83), scale(1.2))


@dataclass(frozen=True)
class TtaConfig:
    augmentations: tuple[Augmentation, ...] = DEFAULT_TTA_AUGMENTATIONS
    fusion_iou: float = DEFAULT_FUSION_IOU

    def __post_init__(self) -> None:
        object.__setattr__(self, "augmentations", tuple(self.augmentations))
        if IDENTITY not in self.augmentations:
            raise ValueError("TTA must include the identity augmentation")
        if not 0.0 <= self.fusion_iou <= 1.0:
            raise ValueError("fusion IoU threshold must lie in [0, 1]")


IDENTITY_ONLY = TtaConfig(augmentations=(IDENTITY,))


@dataclass(frozen=True)
class EnsembleConfig:
    fusion_iou: float = DEFAULT_FUSION_IOU

    def __post_init__(self) -> None:
        if not 0.0 <= self.fusion_iou <= 1.0:
            raise ValueError("fusion IoU threshold must lie in [0, 1]")


# ---------------------------------------------------------------------------
# Inference strategies


def infer_na(
    detector: Detector,
    image: ImageRef,
    conf_threshold: float,
    fusion_iou: float = DEFAULT_FUSION_IOU,
) -> list[Detection]:
    """Single pass, no augmentation, NMS-fused."""
    return nms(detector.detect(image, conf_threshold), fusion_iou)


def _augmented_ref(image: ImageRef, aug: Augmentation, workdir: Path | None) -> ImageRef:
    if aug.kind == "identity":
        return image
    truths = tuple(
        t for t in (aug.apply_box(b) for b in image.truths) if t is not None
    )
    path = image.path
    if path is not None and workdir is not None:
        from .frames import load_frame_16, store_frame_16

        arr = aug.apply_image(load_frame_16(path).samples.astype(np.float64))
        path = workdir / f"{Path(image.path).stem}.{aug.label}.pgm"
        store_frame_16(np.clip(arr, 0, 65535), path)
    return ImageRef(image_id=image.image_id, path=path, truths=truths)


def infer_tta(
    detector: Detector,
    image: ImageRef,
    conf_threshold: float,
    cfg: TtaConfig = TtaConfig(),
) -> list[Detection]:
    """Detect on each augmented view, map boxes back, pool, NMS-fuse.

    Makes exactly one detector call per augmentation, so inference cost
    grows linearly with the augmentation count.
    """
    pooled: list[Detection] = []
    needs_files = image.path is not None and any(
        a.kind != "identity" for a in cfg.augmentations
    )
    with tempfile.TemporaryDirectory(prefix="tta-") if needs_files else _null_ctx() as tmp:
        workdir = Path(tmp) if needs_files else None
        for aug in cfg.augmentations:
            ref = _augmented_ref(image, aug, workdir)
            for det in detector.detect(ref, conf_threshold):
                pooled.append(aug.invert_detection(det))
    return nms(pooled, cfg.fusion_iou)


class _null_ctx:
    def __enter__(self):
        return None

    def __exit__(self, *exc_info):
        return None


def infer_ensemble(
    members: Sequence[Detector],
    image: ImageRef,
    conf_threshold: float,
    cfg: EnsembleConfig = EnsembleConfig(),
) -> list[Detection]:
    """Pool every member's detections and NMS-fuse them."""
    if not members:
        raise ValueError("ensemble needs at least one member")
    pooled: list[Detection] = []
    for i, member in enumerate(members):
        try:
            pooled.extend(member.detect(image, conf_threshold))
        except Exception as exc:
            raise DetectorError(
                f"ensemble member {i} ({getattr(member, 'name', '?')}) failed: {exc}"
            ) from exc
    return nms(pooled, cfg.fusion_iou)
