from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

sys.path.insert(0, str(Path(__file__).parent))

from weldkit.dataset import Annotation, Dataset, ImageRecord
from weldkit.geometry import BBox
from weldkit.raster import Raster


def make_gray(width: int, height: int, seed: int = 0) -> Raster:
    rng = np.random.default_rng(seed)
    return Raster(rng.integers(0, 256, size=(height, width, 1), dtype=np.uint8))


def save_png(raster: Raster, path: Path) -> None:
    if raster.channels == 1:
        Image.fromarray(raster.pixels[:, :, 0], mode="L").save(path)
    else:
        Image.fromarray(raster.pixels, mode="RGB").save(path)


def voc_xml(filename: str, width: int, height: int, depth: int, objects=()) -> str:
    parts = [
        "<annotation>",
        f"  <filename>{filename}</filename>",
        "  <size>",
        f"    <width>{width}</width>",
        f"    <height>{height}</height>",
        f"    <depth>{depth}</depth>",
        "  </size>",
    ]
    for label, xmin, ymin, xmax, ymax in objects:
        parts += [
            "  <object>",
            f"    <name>{label}</name>",
            "    <bndbox>",
            f"      <xmin>{xmin}</xmin>",
            f"      <ymin>{ymin}</ymin>",
            f"      <xmax>{xmax}</xmax>",
            f"      <ymax>{ymax}</ymax>",
            "    </bndbox>",
            "  </object>",
        ]
    parts.append("</annotation>")
    return "\n".join(parts) + "\n"


def make_voc_dir(
    directory: Path,
    boxes_per_image: dict[str, list[tuple[int, int, int, int]]],
    size: tuple[int, int] = (640, 320),
    label: str = "pore",
    seed: int = 7,
) -> Path:
    """Write a synthetic VOC dataset: seeded-noise PNGs plus hand-built XMLs."""
    directory.mkdir(parents=True, exist_ok=True)
    width, height = size
    for i, (image_id, boxes) in enumerate(sorted(boxes_per_image.items())):
        save_png(make_gray(width, height, seed=seed + i), directory / f"{image_id}.png")
        objects = [(label, x0, y0, x1, y1) for x0, y0, x1, y1 in boxes]
        (directory / f"{image_id}.xml").write_text(
            voc_xml(f"{image_id}.png", width, height, 1, objects), encoding="utf-8"
        )
    return directory


def make_dataset(boxes_per_image: dict[str, list[BBox]], size=(640, 320), label="pore") -> Dataset:
    """In-memory dataset; image files may not exist (fine for box-only tests)."""
    width, height = size
    images = [
        ImageRecord(
            image_id=i, file_path=Path(f"/nonexistent/{i}.png"), width=width, height=height
        )
        for i in sorted(boxes_per_image)
    ]
    annotations = [
        Annotation(image_id=i, label=label, box=b)
        for i in sorted(boxes_per_image)
        for b in boxes_per_image[i]
    ]
    return Dataset(images=images, annotations=annotations)


@pytest.fixture
def tiny_voc(tmp_path: Path) -> Path:
    return make_voc_dir(
        tmp_path / "voc",
        {
            "img_a": [(11, 21, 51, 61), (100, 100, 141, 141)],
            "img_b": [(200, 50, 270, 120)],
        },
    )
