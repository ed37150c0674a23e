"""YOLO-format annotated dataset ingestion and corpus statistics.

Label files are UTF-8 text, one box per line: ``<class_id> <cx> <cy> <w> <h>``
with normalized center/size coordinates. Images live under ``images/`` and
labels under ``labels/``, paired by basename. Optional per-frame tags
(time of day, weather, ...) come from a ``tags.json`` mapping basename to
tag string(s).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path

DEFAULT_CLASS_NAMES = ("bicycle", "motorcycle", "bus", "car", "person", "pole-or-sign")

IMAGE_SUFFIXES = (".pgm", ".png")


class AnnotationError(ValueError):
    """Malformed annotation line or inconsistent dataset tree."""


@dataclass(frozen=True)
class GroundTruthBox:
    """Normalized center-format bounding box with a class id."""

    class_id: int
    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if self.class_id < 0:
            raise ValueError(f"class_id must be non-negative, got {self.class_id}")
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0):
            raise ValueError(f"box center ({self.cx}, {self.cy}) outside [0, 1]")
        if not (0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise ValueError(f"box size ({self.w}, {self.h}) outside (0, 1]")


@dataclass(frozen=True)
class ClassScheme:
    """Ordered class names; list index is the class id."""

    names: tuple[str, ...] = DEFAULT_CLASS_NAMES

    def __post_init__(self) -> None:
        object.__setattr__(self, "names", tuple(self.names))
        if len(set(self.names)) != len(self.names):
            raise ValueError("class names must be unique")
        if not self.names:
            raise ValueError("class scheme must name at least one class")

    def __len__(self) -> int:
        return len(self.names)

    def name_of(self, class_id: int) -> str:
        return self.names[class_id]


@dataclass(frozen=True)
class Sample:
    image_path: Path
    truths: tuple[GroundTruthBox, ...]
    tags: tuple[str, ...] = ()


@dataclass(frozen=True)
class Dataset:
    samples: tuple[Sample, ...]
    class_scheme: ClassScheme = field(default_factory=ClassScheme)

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))
        n = len(self.class_scheme)
        for sample in self.samples:
            for box in sample.truths:
                if box.class_id >= n:
                    raise AnnotationError(
                        f"{sample.image_path.name}: class_id {box.class_id} "
                        f"outside the {n}-class scheme"
                    )

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class DatasetStats:
    frame_count: int
    class_counts: dict[str, int]
    tag_frame_counts: dict[str, int]
    tag_percentages: dict[str, float]


def parse_annotation_line(line: str, scheme: ClassScheme) -> GroundTruthBox:
    """Parse one ``<class_id> <cx> <cy> <w> <h>`` label line."""
    fields = line.split()
    if len(fields) != 5:
        raise AnnotationError(f"expected 5 fields, got {len(fields)}: {line!r}")
    try:
        class_id = int(fields[0])
        cx, cy, w, h = (float(v) for v in fields[1:])
    except ValueError as exc:
        raise AnnotationError(f"non-numeric field in {line!r}") from exc
    if not 0 <= class_id < len(scheme):
        raise AnnotationError(
            f"class_id {class_id} outside the {len(scheme)}-class scheme"
        )
    try:
        return GroundTruthBox(class_id, cx, cy, w, h)
    except ValueError as exc:
        # Out-of-range coordinates are a hard error: clamping would hide corruption.
        raise AnnotationError(f"{exc}: {line!r}") from exc


def format_annotation_line(box: GroundTruthBox) -> str:
    return f"{box.class_id} {box.cx:.6f} {box.cy:.6f} {box.w:.6f} {box.h:.6f}"


def read_label_file(path: Path, scheme: ClassScheme) -> tuple[GroundTruthBox, ...]:
    boxes = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            boxes.append(parse_annotation_line(line, scheme))
        except AnnotationError as exc:
            raise AnnotationError(f"{path.name}:{lineno}: {exc}") from exc
    return tuple(boxes)


def write_label_file(boxes, path: Path) -> None:
    path.write_text(
        "".join(format_annotation_line(b) + "\n" for b in boxes), encoding="utf-8"
    )


def _load_tags(root: Path) -> dict[str, tuple[str, ...]]:
    tags_path = root / "tags.json"
    if not tags_path.is_file():
        return {}
    raw = json.loads(tags_path.read_text(encoding="utf-8"))
    tags: dict[str, tuple[str, ...]] = {}
    for basename, value in raw.items():
        if isinstance(value, str):
            tags[basename] = (value,)
        else:
            tags[basename] = tuple(str(v) for v in value)
    return tags


def load_dataset(root: str | Path, scheme: ClassScheme | None = None) -> Dataset:
    """Load an ``images/`` + ``labels/`` tree into a Dataset.

    Every image becomes a sample; an image without a label file gets an
    empty truth list, but a label file without an image is an error.
    """
    root = Path(root)
    scheme = scheme or ClassScheme()
    if not root.is_dir():
        raise AnnotationError(f"dataset root {root} is not a directory")
    images_dir = root / "images"
    labels_dir = root / "labels"
    image_paths = (
        sorted(p for p in images_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
        if images_dir.is_dir()
        else []
    )
    label_paths = (
        sorted(labels_dir.glob("*.txt")) if labels_dir.is_dir() else []
    )
    image_basenames = {p.stem for p in image_paths}
    orphans = [p.name for p in label_paths if p.stem not in image_basenames]
    if orphans:
        raise AnnotationError(f"orphan label file(s) without matching image: {', '.join(orphans)}")
    tags = _load_tags(root)
    samples = []
    for image_path in image_paths:
        label_path = labels_dir / (image_path.stem + ".txt")
        truths = read_label_file(label_path, scheme) if label_path.is_file() else ()
        samples.append(
            Sample(image_path=image_path, truths=truths, tags=tags.get(image_path.stem, ()))
        )
    return Dataset(samples=tuple(samples), class_scheme=scheme)


def percentage(count: int, total: int) -> float:
    """count/total as a percentage, 2 decimals, round-half-to-even."""
    if total == 0:
        return 0.0
    exact = Decimal(count) * 100 / Decimal(total)
    return float(exact.quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN))


def dataset_stats(ds: Dataset) -> DatasetStats:
    """Exact per-class instance counts and per-tag frame counts/percentages."""
    class_counts = {name: 0 for name in ds.class_scheme.names}
    tag_frame_counts: dict[str, int] = {}
    for sample in ds.samples:
        for box in sample.truths:
            class_counts[ds.class_scheme.name_of(box.class_id)] += 1
        for tag in sample.tags:
            tag_frame_counts[tag] = tag_frame_counts.get(tag, 0) + 1
    total = len(ds.samples)
    tag_percentages = {
        tag: percentage(count, total) for tag, count in sorted(tag_frame_counts.items())
    }
    return DatasetStats(
        frame_count=total,
        class_counts=class_counts,
        tag_frame_counts=dict(sorted(tag_frame_counts.items())),
        tag_percentages=tag_percentages,
    )


def tag_percentages_from_counts(counts: dict[str, int]) -> dict[str, float]:
    """Percentages of a tag-count table (denominator = sum of counts)."""
    total = sum(counts.values())
    return {tag: percentage(count, total) for tag, count in counts.items()}
