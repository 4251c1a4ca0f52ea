"""Independent oracles used by the tests.

These deliberately avoid the library's computation paths: IoU is checked by
counting rasterized pixels, and box propagation is checked by transforming a
rasterized mask and taking its tight bounding box.
"""

from __future__ import annotations

import numpy as np

from weldkit.geometry import BBox
from weldkit.raster import Raster


def rasterize_box(box: BBox, width: int, height: int) -> np.ndarray:
    """Boolean mask of pixels whose centers fall inside the box."""
    ys, xs = np.mgrid[0:height, 0:width]
    cx = xs + 0.5
    cy = ys + 0.5
    return (box.x_min <= cx) & (cx < box.x_max) & (box.y_min <= cy) & (cy < box.y_max)


def rasterized_iou(a: BBox, b: BBox, width: int, height: int) -> float:
    ma = rasterize_box(a, width, height)
    mb = rasterize_box(b, width, height)
    union = np.count_nonzero(ma | mb)
    if union == 0:
        return 0.0
    return np.count_nonzero(ma & mb) / union


def box_mask_raster(box: BBox, width: int, height: int) -> Raster:
    mask = rasterize_box(box, width, height)
    return Raster((mask.astype(np.uint8) * 255)[:, :, np.newaxis])


def tight_box(r: Raster, threshold: int = 128) -> BBox | None:
    """Tight bounding box of mask pixels at or above half intensity."""
    ys, xs = np.nonzero(r.pixels[:, :, 0] >= threshold)
    if len(xs) == 0:
        return None
    return BBox(float(xs.min()), float(ys.min()), float(xs.max() + 1), float(ys.max() + 1))


def dense_gaussian_blur(pixels: np.ndarray, sigma: float) -> np.ndarray:
    """Direct 2-D convolution with a normalized Gaussian kernel, edges clamped.

    Slow by construction; checks the separable implementation.
    """
    radius = int(np.ceil(3.0 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(xs**2) / (2.0 * sigma * sigma))
    g = g / g.sum()
    kernel = np.outer(g, g)

    h, w, c = pixels.shape
    padded = np.pad(
        pixels.astype(np.float64), ((radius, radius), (radius, radius), (0, 0)), mode="edge"
    )
    out = np.zeros((h, w, c))
    for i in range(h):
        for j in range(w):
            window = padded[i : i + 2 * radius + 1, j : j + 2 * radius + 1, :]
            out[i, j, :] = np.tensordot(kernel, window, axes=([0, 1], [0, 1]))
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)
