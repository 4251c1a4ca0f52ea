from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image


def make_images(directory: Path, n: int, size=(640, 320), seed: int = 0) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    width, height = size
    for i in range(n):
        arr = rng.integers(0, 256, size=(height, width), dtype=np.uint8)
        Image.fromarray(arr, mode="L").save(directory / f"weld{i:03d}.png")
    return directory


def write_stub(path: Path, detections: list[dict]) -> Path:
    path.write_text(
        json.dumps({"format": "stub-detector", "detections": detections}), encoding="utf-8"
    )
    return path
