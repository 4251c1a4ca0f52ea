"""weldkit: dataset preparation, offline augmentation, COCO-matrix evaluation
and accept/reject decisions for weld-seam pore detection."""

from .augment import (
    AugmentOp,
    AugmentPlan,
    Provenance,
    augment_one,
    bucket_report,
    sample_combo,
    scale_dataset,
)
from .cocoeval import (
    EvalConfig,
    EvalResult,
    MatchSet,
    compare_runs,
    evaluate,
    match,
    pr_curve,
)
from .dataset import (
    Annotation,
    Dataset,
    Detection,
    ImageRecord,
    SizeHistogram,
    size_histogram,
    split,
)
from .detections import load_detections
from .geometry import (
    AffineMap,
    BBox,
    SizeBucket,
    SizeBuckets,
    area,
    classify_size,
    clip,
    iou,
    transform_bbox,
)
from .qa import Calibration, Verdict, assess, pore_size_mm
from .raster import (
    CropRect,
    Raster,
    add_gaussian_noise,
    adjust_contrast,
    affine_warp,
    crop,
    flip,
    gaussian_blur,
    gray_to_rgb,
    normalize_contrast,
    read_png,
    write_png,
)
from .voc import load_voc, write_voc

__version__ = "0.1.0"

__all__ = [
    "AffineMap",
    "Annotation",
    "AugmentOp",
    "AugmentPlan",
    "BBox",
    "Calibration",
    "CropRect",
    "Dataset",
    "Detection",
    "EvalConfig",
    "EvalResult",
    "ImageRecord",
    "MatchSet",
    "Provenance",
    "Raster",
    "SizeBucket",
    "SizeBuckets",
    "SizeHistogram",
    "Verdict",
    "add_gaussian_noise",
    "adjust_contrast",
    "affine_warp",
    "area",
    "assess",
    "augment_one",
    "bucket_report",
    "classify_size",
    "clip",
    "compare_runs",
    "crop",
    "evaluate",
    "flip",
    "gaussian_blur",
    "gray_to_rgb",
    "iou",
    "load_detections",
    "load_voc",
    "match",
    "normalize_contrast",
    "pore_size_mm",
    "pr_curve",
    "read_png",
    "sample_combo",
    "scale_dataset",
    "size_histogram",
    "split",
    "transform_bbox",
    "write_png",
    "write_voc",
]
