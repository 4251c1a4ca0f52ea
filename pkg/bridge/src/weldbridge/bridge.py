"""Batch inference over an image directory, emitting a detections file.

Output records use the evaluation toolkit's detections format: one JSON
object per line with image_id, label, bbox [x, y, width, height] and score.
Boxes are reported in original-image pixel coordinates: the model sees a
resized input, its normalized boxes are scaled back by each image's own
width and height, so the resize never leaks into the output.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .models import load_model

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BridgeConfig:
    model: Path
    images: Path
    out: Path
    score_floor: float = 0.0
    resize: tuple[int, int] = (300, 300)
    batch_size: int = 1

    def __post_init__(self):
        if not Path(self.model).exists():
            raise ValueError(f"model not found: {self.model}")
        if not 0.0 <= self.score_floor <= 1.0:
            raise ValueError(f"score floor must lie in [0, 1], got {self.score_floor}")
        if self.resize[0] <= 0 or self.resize[1] <= 0:
            raise ValueError(f"resize must be positive, got {self.resize}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")


def _load_input(path: Path, resize: tuple[int, int]) -> tuple[np.ndarray, int, int]:
    with Image.open(path) as im:
        width, height = im.size
        rgb = im.convert("RGB").resize(resize, Image.BILINEAR)
        return np.asarray(rgb, dtype=np.uint8), width, height


def infer_dir(cfg: BridgeConfig) -> Path:
    """Run the model over every PNG in the directory, sorted by name.

    Unreadable images are skipped with a warning and listed in a sidecar
    file next to the output. Returns the output path.
    """
    model = load_model(cfg.model)
    image_paths = sorted(Path(cfg.images).glob("*.png"))

    entries = []  # (image_id, original width, original height, input tensor)
    skipped: list[str] = []
    for path in image_paths:
        try:
            tensor, width, height = _load_input(path, cfg.resize)
        except Exception as exc:
            log.warning("skipping unreadable image %s: %s", path, exc)
            skipped.append(str(path))
            continue
        entries.append((path.stem, width, height, tensor))

    out_path = Path(cfg.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        for start in range(0, len(entries), cfg.batch_size):
            chunk = entries[start : start + cfg.batch_size]
            batch = np.stack([tensor for _, _, _, tensor in chunk])
            for (image_id, width, height, _), dets in zip(chunk, model.predict(batch)):
                for label, (x0, y0, x1, y1), score in dets:
                    if score < cfg.score_floor:
                        continue
                    record = {
                        "image_id": image_id,
                        "label": label,
                        "bbox": [
                            x0 * width,
                            y0 * height,
                            (x1 - x0) * width,
                            (y1 - y0) * height,
                        ],
                        "score": score,
                    }
                    fh.write(json.dumps(record) + "\n")

    sidecar = out_path.with_name(out_path.name + ".skipped")
    if skipped:
        sidecar.write_text("\n".join(skipped) + "\n", encoding="utf-8")
    elif sidecar.exists():
        sidecar.unlink()
    return out_path
