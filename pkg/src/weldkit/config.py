"""Run configuration: an INI-style file with one section per pipeline stage,
overridable by CLI flags. Unknown sections or keys are rejected so a typo
cannot silently fall back to a default.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .augment import DEFAULT_RANGES, AugmentPlan
from .cocoeval import EvalConfig, default_iou_thresholds
from .geometry import SizeBuckets
from .qa import SIZE_MEASURES, Calibration


def _csv_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v.strip()) for v in text.split(","))


def _csv_ints(text: str) -> tuple[int, ...]:
    return tuple(int(v.strip()) for v in text.split(","))


def _csv_names(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _pair(text: str) -> tuple[float, float]:
    values = _csv_floats(text)
    if len(values) != 2:
        raise ValueError(f"expected 'lo,hi', got {text!r}")
    return values[0], values[1]


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration for one CLI invocation."""

    seed: int = 0
    workers: int = 1
    # prep
    crop: tuple[int, int, int, int] | None = None  # None: centered crop_size at the top
    crop_size: tuple[int, int] = (300, 300)
    enhance: bool = True
    min_box_area: float = 16.0
    # size buckets
    small_max_area: float = 32.0 * 32.0
    large_min_area: float = 64.0 * 64.0
    # augmentation
    factor: int = 2
    ops: tuple[str, ...] = tuple(DEFAULT_RANGES)
    scale_x: tuple[float, float] = DEFAULT_RANGES["scale_translate"]["scale_x"]
    scale_y: tuple[float, float] = DEFAULT_RANGES["scale_translate"]["scale_y"]
    translate_x: tuple[float, float] = DEFAULT_RANGES["scale_translate"]["translate_x"]
    translate_y: tuple[float, float] = DEFAULT_RANGES["scale_translate"]["translate_y"]
    blur_sigma: tuple[float, float] = DEFAULT_RANGES["blur"]["sigma"]
    contrast_factor: tuple[float, float] = DEFAULT_RANGES["contrast"]["factor"]
    noise_sigma: tuple[float, float] = DEFAULT_RANGES["noise"]["sigma"]
    # evaluation
    iou_thresholds: tuple[float, ...] = field(default_factory=default_iou_thresholds)
    max_dets: tuple[int, ...] = (1, 10, 100)
    score_floor: float = 0.0
    recall_points: int = 101
    # split
    ratios: tuple[float, float, float] | None = None
    # assessment
    threshold_mm: float | None = None
    min_score: float = 0.0
    px_per_mm: float = 40.0
    measure: str = "longer_side"

    def buckets(self) -> SizeBuckets:
        return SizeBuckets(small_max_area=self.small_max_area, large_min_area=self.large_min_area)

    def augment_plan(self) -> AugmentPlan:
        ranges = {k: dict(v) for k, v in DEFAULT_RANGES.items()}
        ranges["scale_translate"] = {
            "scale_x": self.scale_x,
            "scale_y": self.scale_y,
            "translate_x": self.translate_x,
            "translate_y": self.translate_y,
        }
        ranges["blur"] = {"sigma": self.blur_sigma}
        ranges["contrast"] = {"factor": self.contrast_factor}
        ranges["noise"] = {"sigma": self.noise_sigma}
        return AugmentPlan(
            scale_factor=self.factor,
            master_seed=self.seed,
            op_pool=self.ops,
            ranges=ranges,
            min_box_area=self.min_box_area,
        )

    def eval_config(self) -> EvalConfig:
        return EvalConfig(
            iou_thresholds=self.iou_thresholds,
            recall_points=self.recall_points,
            max_dets=self.max_dets,
            buckets=self.buckets(),
            score_floor=self.score_floor,
        )

    def calibration(self) -> Calibration:
        return Calibration(px_per_mm=self.px_per_mm)


# section -> key -> (RunConfig field, parser)
_SCHEMA = {
    "run": {
        "seed": ("seed", int),
        "workers": ("workers", int),
    },
    "prep": {
        "crop": ("crop", lambda t: tuple(_csv_ints(t))),
        "crop_size": ("crop_size", lambda t: tuple(_csv_ints(t))),
        "enhance": ("enhance", _bool),
        "min_box_area": ("min_box_area", float),
    },
    "buckets": {
        "small_max_area": ("small_max_area", float),
        "large_min_area": ("large_min_area", float),
    },
    "augment": {
        "factor": ("factor", int),
        "ops": ("ops", _csv_names),
        "scale_x": ("scale_x", _pair),
        "scale_y": ("scale_y", _pair),
        "translate_x": ("translate_x", _pair),
        "translate_y": ("translate_y", _pair),
        "blur_sigma": ("blur_sigma", _pair),
        "contrast_factor": ("contrast_factor", _pair),
        "noise_sigma": ("noise_sigma", _pair),
    },
    "eval": {
        "iou_thresholds": ("iou_thresholds", _csv_floats),
        "max_dets": ("max_dets", _csv_ints),
        "score_floor": ("score_floor", float),
        "recall_points": ("recall_points", int),
    },
    "split": {
        "ratios": ("ratios", lambda t: tuple(_csv_floats(t))),
    },
    "assess": {
        "threshold_mm": ("threshold_mm", float),
        "min_score": ("min_score", float),
        "px_per_mm": ("px_per_mm", float),
        "measure": ("measure", str),
    },
}


def load_config(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    """Parse a config file onto `base` (or the defaults), rejecting unknown keys."""
    base = base or RunConfig()
    parser = configparser.ConfigParser()
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh, source=str(path))

    updates = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ValueError(f"{path.name}: unknown config section [{section}]")
        for key, raw in parser[section].items():
            if key not in _SCHEMA[section]:
                raise ValueError(f"{path.name}: unknown key {key!r} in section [{section}]")
            attr, parse = _SCHEMA[section][key]
            try:
                updates[attr] = parse(raw)
            except ValueError as exc:
                raise ValueError(f"{path.name}: [{section}] {key}: {exc}") from None
    cfg = replace(base, **updates)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.workers < 1:
        raise ValueError(f"workers must be >= 1, got {cfg.workers}")
    if cfg.crop is not None and len(cfg.crop) != 4:
        raise ValueError(f"crop must be x,y,w,h, got {cfg.crop}")
    if len(cfg.crop_size) != 2:
        raise ValueError(f"crop_size must be w,h, got {cfg.crop_size}")
    if cfg.ratios is not None and len(cfg.ratios) != 3:
        raise ValueError(f"ratios must be train,val,test, got {cfg.ratios}")
    if cfg.measure not in SIZE_MEASURES:
        raise ValueError(f"measure must be one of {SIZE_MEASURES}, got {cfg.measure!r}")
    # delegate range checks to the constructors that own them
    cfg.buckets()
    cfg.eval_config()
    cfg.augment_plan()
    cfg.calibration()


def config_field_names() -> set[str]:
    return {f.name for f in fields(RunConfig)}
