"""Pixel-level raster operations: cropping, channel duplication, contrast,
blur, noise, flips and affine warps, with bounding boxes propagated alongside.

Rasters are 8-bit, shape (height, width, channels) with 1 or 3 channels.
Pixel (row i, column j) occupies the cell [j, j+1) x [i, i+1) in box
coordinates, with its center at (j + 0.5, i + 0.5). Sampling in affine_warp
follows this convention, which keeps propagated boxes and resampled pixels
aligned within a pixel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from PIL import Image

from .dataset import Annotation
from .geometry import AffineMap, BBox, area, clip, transform_bbox

DEFAULT_MIN_BOX_AREA = 16.0  # px^2; clipped remnants below this are dropped


@dataclass(frozen=True)
class Raster:
    """8-bit image; pixels has shape (height, width, channels)."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if p.dtype != np.uint8:
            raise ValueError(f"raster must be uint8, got {p.dtype}")
        if p.ndim != 3 or p.shape[2] not in (1, 3):
            raise ValueError(f"raster must be (h, w, 1|3), got shape {p.shape}")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @staticmethod
    def from_array(arr: np.ndarray) -> "Raster":
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        return Raster(np.ascontiguousarray(arr, dtype=np.uint8))


@dataclass(frozen=True)
class CropRect:
    x: int
    y: int
    width: int
    height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"crop rect must have positive size: {self}")


def read_png(path) -> Raster:
    with Image.open(path) as im:
        if im.mode == "L":
            arr = np.asarray(im)[:, :, np.newaxis]
        elif im.mode == "RGB":
            arr = np.asarray(im)
        else:
            raise ValueError(f"{path}: unsupported image mode {im.mode!r}, need 8-bit L or RGB")
    return Raster(np.ascontiguousarray(arr, dtype=np.uint8))


def write_png(r: Raster, path) -> None:
    if r.channels == 1:
        im = Image.fromarray(r.pixels[:, :, 0], mode="L")
    else:
        im = Image.fromarray(r.pixels, mode="RGB")
    im.save(path, format="PNG")


def encode_png(r: Raster) -> bytes:
    import io

    buf = io.BytesIO()
    write_png(r, buf)
    return buf.getvalue()


def _round_u8(values: np.ndarray) -> np.ndarray:
    # round-half-up, then clamp into the 8-bit range
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def _clip_and_filter(
    anns: list[Annotation], width: int, height: int, min_box_area: float
) -> list[Annotation]:
    kept = []
    for ann in anns:
        clipped = clip(ann.box, width, height)
        if clipped is None or area(clipped) < min_box_area:
            continue
        kept.append(replace(ann, box=clipped))
    return kept


def crop(
    r: Raster,
    rect: CropRect,
    anns: list[Annotation] | None = None,
    min_box_area: float = DEFAULT_MIN_BOX_AREA,
) -> tuple[Raster, list[Annotation]]:
    """Cut `rect` out of the raster and shift boxes into crop coordinates.

    Boxes are translated by (-rect.x, -rect.y), clipped to the crop window
    and dropped when nothing above `min_box_area` remains.
    """
    if rect.x < 0 or rect.y < 0 or rect.x + rect.width > r.width or rect.y + rect.height > r.height:
        raise ValueError(f"crop rect {rect} outside raster {r.width}x{r.height}")
    out = r.pixels[rect.y : rect.y + rect.height, rect.x : rect.x + rect.width].copy()
    shifted = [
        replace(a, box=a.box.translate(-float(rect.x), -float(rect.y))) for a in (anns or [])
    ]
    return Raster(out), _clip_and_filter(shifted, rect.width, rect.height, min_box_area)


def gray_to_rgb(r: Raster) -> Raster:
    """Duplicate the single gray channel into three identical channels."""
    if r.channels != 1:
        raise ValueError("raster already has 3 channels; refusing to duplicate again")
    return Raster(np.repeat(r.pixels, 3, axis=2))


def normalize_contrast(r: Raster) -> Raster:
    """Linear stretch mapping the 1st percentile to 0 and the 99th to 255.

    Constant images (and any image whose two percentiles coincide) are
    returned unchanged.
    """
    samples = r.pixels.reshape(-1).astype(np.float64)
    lo, hi = np.percentile(samples, (1.0, 99.0))
    if hi <= lo:
        return Raster(r.pixels.copy())
    stretched = (r.pixels.astype(np.float64) - lo) * (255.0 / (hi - lo))
    return Raster(_round_u8(stretched))


def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(math.ceil(3.0 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(xs**2) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def gaussian_blur(r: Raster, sigma: float) -> Raster:
    """Separable Gaussian blur, kernel radius ceil(3*sigma), edges clamped."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return Raster(r.pixels.copy())
    kernel = _gaussian_kernel(sigma)
    radius = len(kernel) // 2

    out = r.pixels.astype(np.float64)
    for axis in (0, 1):
        pad = [(0, 0)] * 3
        pad[axis] = (radius, radius)
        padded = np.pad(out, pad, mode="edge")
        acc = np.zeros_like(out)
        for i, k in enumerate(kernel):
            if axis == 0:
                acc += k * padded[i : i + r.height, :, :]
            else:
                acc += k * padded[:, i : i + r.width, :]
        out = acc
    return Raster(_round_u8(out))


def adjust_contrast(r: Raster, factor: float) -> Raster:
    """Scale sample values about the mid-gray pivot 128."""
    if factor <= 0:
        raise ValueError(f"contrast factor must be > 0, got {factor}")
    out = (r.pixels.astype(np.float64) - 128.0) * factor + 128.0
    return Raster(_round_u8(out))


def add_gaussian_noise(r: Raster, sigma: float, seed: int) -> Raster:
    """Add seeded zero-mean Gaussian noise, drawn independently per sample."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return Raster(r.pixels.copy())
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, size=r.pixels.shape)
    return Raster(_round_u8(r.pixels.astype(np.float64) + noise))


def flip(
    r: Raster, axis: str, anns: list[Annotation] | None = None
) -> tuple[Raster, list[Annotation]]:
    """Mirror the raster; 'horizontal' mirrors left-right, 'vertical' top-bottom.

    A horizontal flip maps a box to (W - x_max, y_min, W - x_min, y_max); the
    vertical flip is the y analog. Applying the same flip twice restores both
    the raster bytes and the boxes exactly.
    """
    if axis == "horizontal":
        out = r.pixels[:, ::-1, :].copy()
        w = float(r.width)
        flipped = [
            replace(a, box=BBox(w - a.box.x_max, a.box.y_min, w - a.box.x_min, a.box.y_max))
            for a in (anns or [])
        ]
    elif axis == "vertical":
        out = r.pixels[::-1, :, :].copy()
        h = float(r.height)
        flipped = [
            replace(a, box=BBox(a.box.x_min, h - a.box.y_max, a.box.x_max, h - a.box.y_min))
            for a in (anns or [])
        ]
    else:
        raise ValueError(f"axis must be 'horizontal' or 'vertical', got {axis!r}")
    return Raster(out), flipped


def affine_warp(
    r: Raster,
    m: AffineMap,
    anns: list[Annotation] | None = None,
    fill: int = 0,
    min_box_area: float = DEFAULT_MIN_BOX_AREA,
) -> tuple[Raster, list[Annotation]]:
    """Warp the raster by an affine map onto a same-sized canvas.

    Output pixels are inverse-mapped through `m` and sampled bilinearly from
    the source; samples outside the source frame read the constant `fill`.
    Boxes are propagated through the forward map (corner hull), clipped to the
    canvas, and dropped below `min_box_area`.
    """
    if m.det == 0:
        raise ValueError("singular affine map")
    inv = m.inverse()
    h, w = r.height, r.width

    # pixel centers of the output canvas, inverse-mapped to source coordinates
    ys, xs = np.mgrid[0:h, 0:w]
    cx = xs + 0.5
    cy = ys + 0.5
    sx = inv.a * cx + inv.b * cy + inv.tx
    sy = inv.c * cx + inv.d * cy + inv.ty

    # bilinear sample positions in index space; pad ring supplies the fill
    u = sx - 0.5
    v = sy - 0.5
    u0 = np.floor(u).astype(np.int64)
    v0 = np.floor(v).astype(np.int64)
    fu = u - u0
    fv = v - v0

    padded = np.pad(
        r.pixels.astype(np.float64),
        ((1, 1), (1, 1), (0, 0)),
        mode="constant",
        constant_values=float(fill),
    )
    # clamped indices land in the pad ring for every out-of-frame sample,
    # so far-out pixels blend fill with fill and come out as pure fill
    ui = np.clip(u0 + 1, 0, w + 1)
    ui1 = np.clip(u0 + 2, 0, w + 1)
    vi = np.clip(v0 + 1, 0, h + 1)
    vi1 = np.clip(v0 + 2, 0, h + 1)

    wa = (1 - fu) * (1 - fv)
    wb = fu * (1 - fv)
    wc = (1 - fu) * fv
    wd = fu * fv
    out = (
        wa[..., None] * padded[vi, ui]
        + wb[..., None] * padded[vi, ui1]
        + wc[..., None] * padded[vi1, ui]
        + wd[..., None] * padded[vi1, ui1]
    )

    boxes = [replace(a, box=transform_bbox(a.box, m)) for a in (anns or [])]
    return Raster(_round_u8(out)), _clip_and_filter(boxes, w, h, min_box_area)
