"""Detector model loading.

Two model kinds are supported:

- a JSON stub (``*.json`` with ``"format": "stub-detector"``) that returns a
  fixed set of boxes for every image; deterministic, needs no weights, used
  by the test suite and for dry runs;
- a TensorFlow SavedModel directory exporting the standard detection
  signature (``detection_boxes``/``detection_scores``/``detection_classes``),
  loaded lazily so TensorFlow is only imported when actually needed.

Both return detections as (label, (x0, y0, x1, y1), score) with corners
normalized to [0, 1] relative to the model input frame.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

RawDetection = tuple[str, tuple[float, float, float, float], float]


class StubModel:
    """Fixed detections for every image, read from a small JSON file."""

    def __init__(self, detections: list[RawDetection]):
        self.detections = detections

    @staticmethod
    def load(path: Path) -> "StubModel":
        data = json.loads(path.read_text(encoding="utf-8"))
        if data.get("format") != "stub-detector":
            raise ValueError(f"{path}: not a stub-detector file")
        detections: list[RawDetection] = []
        for i, rec in enumerate(data.get("detections", [])):
            box = rec.get("box")
            score = rec.get("score")
            label = rec.get("label", "pore")
            if not (isinstance(box, list) and len(box) == 4):
                raise ValueError(f"{path}: detection {i}: box must be [x0, y0, x1, y1]")
            x0, y0, x1, y1 = (float(v) for v in box)
            if not (0 <= x0 <= x1 <= 1 and 0 <= y0 <= y1 <= 1):
                raise ValueError(f"{path}: detection {i}: corners must be normalized")
            if not (isinstance(score, (int, float)) and 0 <= score <= 1):
                raise ValueError(f"{path}: detection {i}: score must lie in [0, 1]")
            detections.append((str(label), (x0, y0, x1, y1), float(score)))
        return StubModel(detections)

    def predict(self, batch: np.ndarray) -> list[list[RawDetection]]:
        return [list(self.detections) for _ in range(batch.shape[0])]


class SavedModelDetector:
    """TensorFlow SavedModel with the common detection export signature."""

    def __init__(self, fn, labels: dict[int, str]):
        self._fn = fn
        self._labels = labels

    @staticmethod
    def load(path: Path) -> "SavedModelDetector":
        try:
            import tensorflow as tf
        except ImportError as exc:
            raise ValueError(f"{path}: loading a SavedModel requires tensorflow: {exc}") from None
        loaded = tf.saved_model.load(str(path))
        fn = loaded.signatures.get("serving_default") if hasattr(loaded, "signatures") else None
        if fn is None:
            fn = loaded
        labels = {}
        labels_file = path / "labels.json"
        if labels_file.exists():
            labels = {int(k): str(v) for k, v in json.loads(labels_file.read_text()).items()}
        return SavedModelDetector(fn, labels)

    def _label(self, index: int) -> str:
        return self._labels.get(index, "pore")

    def predict(self, batch: np.ndarray) -> list[list[RawDetection]]:
        import tensorflow as tf

        out = []
        for image in batch:
            raw = self._fn(tf.convert_to_tensor(image[np.newaxis, ...]))
            boxes = np.asarray(raw["detection_boxes"])[0]  # [ymin, xmin, ymax, xmax]
            scores = np.asarray(raw["detection_scores"])[0]
            classes = np.asarray(raw["detection_classes"])[0]
            count = int(np.asarray(raw["num_detections"]).reshape(-1)[0])
            dets: list[RawDetection] = []
            for k in range(count):
                ymin, xmin, ymax, xmax = (float(v) for v in boxes[k])
                dets.append(
                    (
                        self._label(int(classes[k])),
                        (xmin, ymin, xmax, ymax),
                        float(scores[k]),
                    )
                )
            out.append(dets)
        return out


def load_model(path: str | Path):
    """Pick the model loader from the artifact layout."""
    path = Path(path)
    if not path.exists():
        raise ValueError(f"model not found: {path}")
    if path.is_file() and path.suffix == ".json":
        return StubModel.load(path)
    if path.is_dir() and (path / "saved_model.pb").exists():
        return SavedModelDetector.load(path)
    raise ValueError(
        f"unrecognized model artifact {path}: expected a stub-detector .json "
        f"file or a SavedModel directory"
    )
