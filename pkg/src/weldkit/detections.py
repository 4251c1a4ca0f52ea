"""Detections file ingestion.

The detections file is the boundary to the detector: UTF-8, one JSON object
per line with fields image_id (string), label (string), bbox ([x, y, width,
height] in pixels) and score (number in [0, 1]). Boxes are converted to
corner form on load. Records are kept even when their image_id is unknown;
the evaluator decides what to do with them.
"""

from __future__ import annotations

import json
from pathlib import Path

from .dataset import Detection
from .geometry import BBox


def parse_detection(record: dict, where: str) -> Detection:
    try:
        image_id = record["image_id"]
        label = record["label"]
        bbox = record["bbox"]
        score = record["score"]
    except KeyError as exc:
        raise ValueError(f"{where}: missing field {exc.args[0]!r}") from None
    if not isinstance(image_id, str) or not image_id:
        raise ValueError(f"{where}: image_id must be a non-empty string")
    if not isinstance(label, str) or not label:
        raise ValueError(f"{where}: label must be a non-empty string")
    if not isinstance(bbox, (list, tuple)) or len(bbox) != 4:
        raise ValueError(f"{where}: bbox must be [x, y, width, height]")
    try:
        x, y, w, h = (float(v) for v in bbox)
    except (TypeError, ValueError):
        raise ValueError(f"{where}: bbox values must be numbers: {bbox!r}") from None
    if w < 0 or h < 0:
        raise ValueError(f"{where}: negative bbox width/height: {bbox!r}")
    if not isinstance(score, (int, float)) or isinstance(score, bool):
        raise ValueError(f"{where}: score must be a number")
    if not 0.0 <= score <= 1.0:
        raise ValueError(f"{where}: score {score} outside [0, 1]")
    return Detection(
        image_id=image_id, label=label, box=BBox(x, y, x + w, y + h), score=float(score)
    )


def load_detections(file: str | Path) -> list[Detection]:
    """Parse a detections file; raises ValueError naming the bad record."""
    path = Path(file)
    detections: list[Detection] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path.name}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(record, dict):
                raise ValueError(f"{path.name}:{lineno}: record must be a JSON object")
            detections.append(parse_detection(record, f"{path.name}:{lineno}"))
    return detections
