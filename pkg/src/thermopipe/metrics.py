"""Detection-quality metrics: IoU, greedy matching, AP/mAP, dataset evaluation.

The matching protocol is the common VOC-style one: detections sorted by
confidence claim the highest-IoU unmatched same-class truth at or above
the IoU threshold. AP integrates the precision envelope over recall
(all-point interpolation by default; 11- and 101-point sampling are
available for comparisons). mAP averages the per-class APs of classes
that appear in the ground truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .dataset import Dataset, GroundTruthBox

if TYPE_CHECKING:
    from .detectors import Detection

AP_MODES = ("all-point", "11-point", "101-point")


def _as_ccwh(box) -> tuple[float, float, float, float]:
    if isinstance(box, (tuple, list)):
        cx, cy, w, h = box
        return float(cx), float(cy), float(w), float(h)
    return float(box.cx), float(box.cy), float(box.w), float(box.h)


def iou(a, b) -> float:
    """Intersection-over-union of two center-format boxes; 0 when disjoint.

    Areas come from the same corner arithmetic as the intersection so that
    iou(b, b) is exactly 1.0.
    """
    acx, acy, aw, ah = _as_ccwh(a)
    bcx, bcy, bw, bh = _as_ccwh(b)
    ax0, ax1, ay0, ay1 = acx - aw / 2, acx + aw / 2, acy - ah / 2, acy + ah / 2
    bx0, bx1, by0, by1 = bcx - bw / 2, bcx + bw / 2, bcy - bh / 2, bcy + bh / 2
    ix = min(ax1, bx1) - max(ax0, bx0)
    iy = min(ay1, by1) - max(ay0, by0)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union if union > 0 else 0.0


@dataclass(frozen=True)
class EvalConfig:
    conf_threshold: float
    iou_threshold: float

    def __post_init__(self) -> None:
        for name, v in (("conf", self.conf_threshold), ("iou", self.iou_threshold)):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} threshold {v} outside [0, 1]")


# The grid the edge-platform result tables sweep.
THRESHOLD_GRID = (
    EvalConfig(conf_threshold=0.4, iou_threshold=0.6),
    EvalConfig(conf_threshold=0.2, iou_threshold=0.4),
    EvalConfig(conf_threshold=0.1, iou_threshold=0.2),
)


@dataclass(frozen=True)
class MatchFlag:
    detection: "Detection"
    is_tp: bool
    truth_index: int | None


@dataclass(frozen=True)
class MatchResult:
    """Per-detection TP/FP labels (confidence-descending) plus the FN count."""

    flags: tuple[MatchFlag, ...]
    n_truth: int

    @property
    def tp(self) -> int:
        return sum(1 for f in self.flags if f.is_tp)

    @property
    def fp(self) -> int:
        return sum(1 for f in self.flags if not f.is_tp)

    @property
    def fn(self) -> int:
        return self.n_truth - self.tp


def match_greedy(
    dets: Sequence["Detection"],
    truths: Sequence[GroundTruthBox],
    iou_threshold: float,
) -> MatchResult:
    """Confidence-descending greedy matching, one truth claimed at most once.

    Ties: equal confidence processes the smaller cx first; equal IoU claims
    the lower truth index.
    """
    order = sorted(
        range(len(dets)), key=lambda i: (-dets[i].confidence, dets[i].cx, dets[i].cy, i)
    )
    matched: set[int] = set()
    flags: list[MatchFlag] = []
    for i in order:
        det = dets[i]
        best_iou = 0.0
        best_j: int | None = None
        for j, truth in enumerate(truths):
            if j in matched or truth.class_id != det.class_id:
                continue
            overlap = iou(det, truth)
            if overlap >= iou_threshold and overlap > best_iou:
                best_iou = overlap
                best_j = j
        if best_j is not None:
            matched.add(best_j)
            flags.append(MatchFlag(det, True, best_j))
        else:
            flags.append(MatchFlag(det, False, None))
    return MatchResult(flags=tuple(flags), n_truth=len(truths))


def average_precision(
    flags: Sequence[bool], n_truth: int, mode: str = "all-point"
) -> float | None:
    """Area under the precision envelope for confidence-ordered TP/FP flags.

    Returns None (class undefined, excluded from mAP) when there are no
    ground truths. ``flags`` must already be ordered by descending
    confidence.
    """
    if mode not in AP_MODES:
        raise ValueError(f"unknown AP mode {mode!r}")
    tp_total = sum(1 for f in flags if f)
    if n_truth < 0 or tp_total > n_truth:
        raise ValueError(f"{tp_total} true positives inconsistent with {n_truth} truths")
    if n_truth == 0:
        return None
    if not flags:
        return 0.0
    tp_cum = np.cumsum([1 if f else 0 for f in flags])
    fp_cum = np.cumsum([0 if f else 1 for f in flags])
    recalls = tp_cum / n_truth
    precisions = tp_cum / (tp_cum + fp_cum)
    envelope = np.maximum.accumulate(precisions[::-1])[::-1]
    if mode == "all-point":
        prev = 0.0
        ap = 0.0
        for r, p in zip(recalls, envelope):
            ap += (r - prev) * p
            prev = r
        return float(ap)
    points = 11 if mode == "11-point" else 101
    total = 0.0
    for r in np.linspace(0.0, 1.0, points):
        candidates = envelope[recalls >= r - 1e-12]
        total += float(candidates[0]) if candidates.size else 0.0
    return total / points


@dataclass(frozen=True)
class EvalReport:
    config: EvalConfig
    frame_count: int
    precision: float
    recall: float
    map: float
    per_class_ap: dict[str, float | None]
    tp: int
    fp: int
    fn: int
    zero_predictions: bool
    ap_mode: str = "all-point"

    def to_dict(self) -> dict:
        return {
            "config": {
                "conf_threshold": self.config.conf_threshold,
                "iou_threshold": self.config.iou_threshold,
            },
            "frame_count": self.frame_count,
            "precision": self.precision,
            "recall": self.recall,
            "map": self.map,
            "per_class_ap": self.per_class_ap,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "zero_predictions": self.zero_predictions,
            "ap_mode": self.ap_mode,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def csv_row(self, fps: float | None = None) -> str:
        """Percent-scaled row in the result tables' column order."""
        fps_text = "" if fps is None else f"{fps:.2f}"
        return (
            f"{100 * self.precision:.2f},{100 * self.recall:.2f},"
            f"{100 * self.map:.2f},{fps_text}"
        )


CSV_HEADER = "P%,R%,mAP%,FPS"


def evaluate(
    per_image_detections: Sequence[Sequence["Detection"]],
    dataset: Dataset,
    cfg: EvalConfig,
    ap_mode: str = "all-point",
) -> EvalReport:
    """Dataset-level evaluation at one (confidence, IoU) threshold pair.

    Detections are filtered at the confidence cutoff here (idempotent if
    pre-filtered), matched per image, pooled per class for AP, and pooled
    overall for the precision/recall point. Input detection order never
    affects the result.
    """
    if len(per_image_detections) != len(dataset.samples):
        raise ValueError(
            f"{len(per_image_detections)} detection lists for "
            f"{len(dataset.samples)} samples"
        )
    n_classes = len(dataset.class_scheme)
    class_flags: dict[int, list[tuple]] = {c: [] for c in range(n_classes)}
    class_truths = {c: 0 for c in range(n_classes)}
    tp = fp = fn = 0
    any_predictions = False
    for sample, dets in zip(dataset.samples, per_image_detections):
        for det in dets:
            if det.class_id >= n_classes:
                raise ValueError(
                    f"{sample.image_path.name}: detection class_id {det.class_id} "
                    f"outside the {n_classes}-class scheme"
                )
        kept = [d for d in dets if d.confidence >= cfg.conf_threshold]
        any_predictions = any_predictions or bool(kept)
        result = match_greedy(kept, sample.truths, cfg.iou_threshold)
        tp += result.tp
        fp += result.fp
        fn += result.fn
        for truth in sample.truths:
            class_truths[truth.class_id] += 1
        for flag in result.flags:
            d = flag.detection
            class_flags[d.class_id].append(
                (-d.confidence, d.cx, d.cy, d.w, d.h, flag.is_tp)
            )
    per_class_ap: dict[str, float | None] = {}
    present_aps: list[float] = []
    for class_id in range(n_classes):
        rows = sorted(class_flags[class_id])
        ap = average_precision([r[-1] for r in rows], class_truths[class_id], ap_mode)
        per_class_ap[dataset.class_scheme.name_of(class_id)] = ap
        if ap is not None:
            present_aps.append(ap)
    precision = tp / (tp + fp) if (tp + fp) > 0 else 0.0
    recall = tp / (tp + fn) if (tp + fn) > 0 else 0.0
    return EvalReport(
        config=cfg,
        frame_count=len(dataset.samples),
        precision=precision,
        recall=recall,
        map=float(np.mean(present_aps)) if present_aps else 0.0,
        per_class_ap=per_class_ap,
        tp=tp,
        fp=fp,
        fn=fn,
        zero_predictions=not any_predictions,
        ap_mode=ap_mode,
    )
