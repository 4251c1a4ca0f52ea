"""Axis-aligned bounding-box arithmetic.

Boxes live in continuous pixel coordinates with the origin at the top-left
corner, x growing right and y growing down. A box (x_min, y_min, x_max, y_max)
spans the half-open pixel cells [x_min, x_max) x [y_min, y_max), so an image of
width W covers the x range [0, W].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


@dataclass(frozen=True)
class BBox:
    """Axis-aligned rectangle in continuous pixel coordinates."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        for v in (self.x_min, self.y_min, self.x_max, self.y_max):
            if not math.isfinite(v):
                raise ValueError(f"non-finite bbox coordinate: {self}")
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"inverted bbox: {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def corners(self) -> list[tuple[float, float]]:
        return [
            (self.x_min, self.y_min),
            (self.x_max, self.y_min),
            (self.x_max, self.y_max),
            (self.x_min, self.y_max),
        ]

    def translate(self, dx: float, dy: float) -> "BBox":
        return BBox(self.x_min + dx, self.y_min + dy, self.x_max + dx, self.y_max + dy)


class SizeBucket(str, Enum):
    SMALL = "small"
    MEDIUM = "medium"
    LARGE = "large"


@dataclass(frozen=True)
class SizeBuckets:
    """Area thresholds splitting boxes into small / medium / large.

    Defaults follow the 32^2 / 64^2 px^2 boundaries used for pore sizes.
    """

    small_max_area: float = 32.0 * 32.0
    large_min_area: float = 64.0 * 64.0

    def __post_init__(self):
        if not 0 < self.small_max_area < self.large_min_area:
            raise ValueError(
                f"need 0 < small_max_area < large_min_area, got "
                f"{self.small_max_area}, {self.large_min_area}"
            )


@dataclass(frozen=True)
class AffineMap:
    """2x3 affine map, applied as x' = a*x + b*y + tx, y' = c*x + d*y + ty."""

    a: float
    b: float
    c: float
    d: float
    tx: float
    ty: float

    def __post_init__(self):
        for v in (self.a, self.b, self.c, self.d, self.tx, self.ty):
            if not math.isfinite(v):
                raise ValueError(f"non-finite affine entry: {self}")

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def apply(self, x: float, y: float) -> tuple[float, float]:
        return (self.a * x + self.b * y + self.tx, self.c * x + self.d * y + self.ty)

    def inverse(self) -> "AffineMap":
        det = self.det
        if det == 0:
            raise ValueError("singular affine map has no inverse")
        ia = self.d / det
        ib = -self.b / det
        ic = -self.c / det
        id_ = self.a / det
        return AffineMap(
            ia, ib, ic, id_, -(ia * self.tx + ib * self.ty), -(ic * self.tx + id_ * self.ty)
        )

    def compose(self, other: "AffineMap") -> "AffineMap":
        """Return the map equivalent to applying `other` first, then `self`."""
        return AffineMap(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
            self.a * other.tx + self.b * other.ty + self.tx,
            self.c * other.tx + self.d * other.ty + self.ty,
        )

    @staticmethod
    def identity() -> "AffineMap":
        return AffineMap(1.0, 0.0, 0.0, 1.0, 0.0, 0.0)

    @staticmethod
    def translation(tx: float, ty: float) -> "AffineMap":
        return AffineMap(1.0, 0.0, 0.0, 1.0, tx, ty)

    @staticmethod
    def scaling(sx: float, sy: float, cx: float = 0.0, cy: float = 0.0) -> "AffineMap":
        """Scale about the point (cx, cy); the default is the origin."""
        return AffineMap(sx, 0.0, 0.0, sy, cx - sx * cx, cy - sy * cy)

    @staticmethod
    def hflip(width: float) -> "AffineMap":
        # x' = width - x mirrors the [0, width] span onto itself
        return AffineMap(-1.0, 0.0, 0.0, 1.0, width, 0.0)

    @staticmethod
    def vflip(height: float) -> "AffineMap":
        return AffineMap(1.0, 0.0, 0.0, -1.0, 0.0, height)


def area(b: BBox) -> float:
    """Box area in px^2; zero for degenerate boxes."""
    return b.width * b.height


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes, 0 when the union has zero area.

    For integer-coordinate boxes this equals the ratio of rasterized pixel
    counts exactly, because the intersection of two integer boxes is again an
    integer box.
    """
    ix_min = max(a.x_min, b.x_min)
    iy_min = max(a.y_min, b.y_min)
    ix_max = min(a.x_max, b.x_max)
    iy_max = min(a.y_max, b.y_max)
    iw = ix_max - ix_min
    ih = iy_max - iy_min
    if iw <= 0 or ih <= 0:
        inter = 0.0
    else:
        inter = iw * ih
    union = area(a) + area(b) - inter
    if union <= 0:
        return 0.0
    return inter / union


def classify_size(b: BBox, k: SizeBuckets | None = None) -> SizeBucket:
    """Assign a box to a size bucket by area.

    Boundary areas (exactly small_max_area or large_min_area) count as medium,
    so the three buckets partition all valid boxes.
    """
    k = k or SizeBuckets()
    a = area(b)
    if a < k.small_max_area:
        return SizeBucket.SMALL
    if a > k.large_min_area:
        return SizeBucket.LARGE
    return SizeBucket.MEDIUM


def clip(b: BBox, width: float, height: float) -> BBox | None:
    """Intersect a box with the image frame [0, width] x [0, height].

    Returns None when the intersection has zero area.
    """
    if width <= 0 or height <= 0:
        raise ValueError(f"frame must have positive size, got {width}x{height}")
    x_min = max(b.x_min, 0.0)
    y_min = max(b.y_min, 0.0)
    x_max = min(b.x_max, float(width))
    y_max = min(b.y_max, float(height))
    if x_max - x_min <= 0 or y_max - y_min <= 0:
        return None
    return BBox(x_min, y_min, x_max, y_max)


def transform_bbox(b: BBox, m: AffineMap) -> BBox:
    """Axis-aligned hull of the four transformed corners of `b`."""
    if m.det == 0:
        raise ValueError("singular affine map")
    pts = [m.apply(x, y) for x, y in b.corners()]
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    return BBox(min(xs), min(ys), max(xs), max(ys))
