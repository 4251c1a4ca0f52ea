"""Dataset model: image records, pore annotations, detections, splits."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from .geometry import BBox, SizeBucket, SizeBuckets, classify_size

SPLIT_TAGS = ("train", "val", "test", "unsplit")


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    file_path: Path
    width: int
    height: int
    channels: int = 1

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"{self.image_id}: non-positive image size")
        if self.channels not in (1, 3):
            raise ValueError(f"{self.image_id}: channels must be 1 or 3, got {self.channels}")


@dataclass(frozen=True)
class Annotation:
    image_id: str
    label: str
    box: BBox

    def __post_init__(self):
        if not self.label:
            raise ValueError(f"{self.image_id}: empty annotation label")


@dataclass(frozen=True)
class Detection:
    """A scored, labeled box attributed to an image (detector output)."""

    image_id: str
    label: str
    box: BBox
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"{self.image_id}: score {self.score} outside [0, 1]")


@dataclass
class Dataset:
    images: list[ImageRecord] = field(default_factory=list)
    annotations: list[Annotation] = field(default_factory=list)
    split_tag: str = "unsplit"

    def __post_init__(self):
        if self.split_tag not in SPLIT_TAGS:
            raise ValueError(f"unknown split tag {self.split_tag!r}")
        ids = [r.image_id for r in self.images]
        if len(set(ids)) != len(ids):
            seen, dupes = set(), set()
            for i in ids:
                (dupes if i in seen else seen).add(i)
            raise ValueError(f"duplicate image ids: {sorted(dupes)}")
        known = set(ids)
        for a in self.annotations:
            if a.image_id not in known:
                raise ValueError(f"annotation references unknown image {a.image_id!r}")

    def __len__(self) -> int:
        return len(self.images)

    def image(self, image_id: str) -> ImageRecord:
        for r in self.images:
            if r.image_id == image_id:
                return r
        raise KeyError(image_id)

    def annotations_for(self, image_id: str) -> list[Annotation]:
        return [a for a in self.annotations if a.image_id == image_id]


@dataclass(frozen=True)
class SizeHistogram:
    small: int = 0
    medium: int = 0
    large: int = 0

    @property
    def total(self) -> int:
        return self.small + self.medium + self.large


def size_histogram(d: Dataset, k: SizeBuckets | None = None) -> SizeHistogram:
    """Count annotations per size bucket; counts always sum to len(annotations)."""
    k = k or SizeBuckets()
    counts = {SizeBucket.SMALL: 0, SizeBucket.MEDIUM: 0, SizeBucket.LARGE: 0}
    for a in d.annotations:
        counts[classify_size(a.box, k)] += 1
    return SizeHistogram(
        small=counts[SizeBucket.SMALL],
        medium=counts[SizeBucket.MEDIUM],
        large=counts[SizeBucket.LARGE],
    )


def split(
    d: Dataset, ratios: tuple[float, float, float], seed: int
) -> tuple[Dataset, Dataset, Dataset]:
    """Deterministically partition a dataset into train/val/test by image.

    Image ids are shuffled with the given seed and cut into consecutive
    slices. Slice sizes are floor(ratio * n) with leftover images assigned
    train-first, then val. Each image travels with all its annotations.
    """
    if len(ratios) != 3:
        raise ValueError("need exactly three ratios (train, val, test)")
    if any(r < 0 for r in ratios):
        raise ValueError(f"ratios must be nonnegative, got {ratios}")
    if not math.isclose(sum(ratios), 1.0, abs_tol=1e-9):
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")

    ids = sorted(r.image_id for r in d.images)
    random.Random(seed).shuffle(ids)

    n = len(ids)
    counts = [int(math.floor(r * n)) for r in ratios]
    leftover = n - sum(counts)
    for i in range(leftover):
        counts[i] += 1

    cuts = [counts[0], counts[0] + counts[1]]
    parts = (set(ids[: cuts[0]]), set(ids[cuts[0] : cuts[1]]), set(ids[cuts[1] :]))

    out = []
    for tag, members in zip(("train", "val", "test"), parts):
        out.append(
            Dataset(
                images=[r for r in d.images if r.image_id in members],
                annotations=[a for a in d.annotations if a.image_id in members],
                split_tag=tag,
            )
        )
    return out[0], out[1], out[2]


def with_split_tag(d: Dataset, tag: str) -> Dataset:
    return Dataset(images=list(d.images), annotations=list(d.annotations), split_tag=tag)


__all__ = [
    "Annotation",
    "Dataset",
    "Detection",
    "ImageRecord",
    "SizeHistogram",
    "size_histogram",
    "split",
    "with_split_tag",
]
