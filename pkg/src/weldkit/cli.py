"""Command-line entry point.

Subcommands: stats, prep, augment, split, eval, compare, assess. All
randomness flows from --seed; reruns with identical inputs and configuration
produce byte-identical outputs. Logs go to stderr, results to stdout and the
--out target.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .augment import bucket_report, scale_dataset
from .cocoeval import EvalResult, compare_runs, evaluate
from .config import RunConfig, load_config
from .dataset import Dataset, split
from .detections import load_detections
from .geometry import SizeBuckets
from .qa import assess, verdicts_csv_rows
from .raster import CropRect, crop, gray_to_rgb, normalize_contrast, read_png, write_png
from .voc import load_voc, write_voc

log = logging.getLogger("weldkit")


def _write_csv(path: Path, rows: list[tuple]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = load_config(args.config, base=cfg)
    overrides = {}
    for flag, attr in (
        ("seed", "seed"),
        ("workers", "workers"),
        ("factor", "factor"),
        ("threshold_mm", "threshold_mm"),
        ("min_score", "min_score"),
        ("px_per_mm", "px_per_mm"),
        ("measure", "measure"),
        ("score_floor", "score_floor"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[attr] = value
    if getattr(args, "crop", None):
        overrides["crop"] = tuple(int(v) for v in args.crop.split(","))
    if getattr(args, "no_enhance", False):
        overrides["enhance"] = False
    if getattr(args, "iou_list", None):
        overrides["iou_thresholds"] = tuple(float(v) for v in args.iou_list.split(","))
    if getattr(args, "buckets", None):
        small, large = (float(v) for v in args.buckets.split(","))
        overrides["small_max_area"] = small
        overrides["large_min_area"] = large
    if getattr(args, "ratios", None):
        overrides["ratios"] = tuple(float(v) for v in args.ratios.split(","))
    return replace(cfg, **overrides)


def _out_dir(args: argparse.Namespace) -> Path:
    if not args.out:
        raise ValueError("this subcommand requires --out")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_stats(args: argparse.Namespace, cfg: RunConfig) -> int:
    dataset = load_voc(args.dataset)
    name = Path(args.dataset).name or "dataset"
    report = bucket_report([(name, dataset)], cfg.buckets())
    print(report.render())
    if args.out:
        _write_csv(Path(args.out), [("dataset", "small", "medium", "large")] + report.csv_rows())
    return 0


def _auto_crop_rect(width: int, height: int, cfg: RunConfig) -> CropRect:
    cw, ch = cfg.crop_size
    if cfg.crop is not None:
        x, y, cw, ch = cfg.crop
        return CropRect(x=x, y=y, width=cw, height=ch)
    if width < cw or height < ch:
        raise ValueError(f"image {width}x{height} smaller than crop window {cw}x{ch}")
    return CropRect(x=(width - cw) // 2, y=0, width=cw, height=ch)


def cmd_prep(args: argparse.Namespace, cfg: RunConfig) -> int:
    dataset = load_voc(args.dataset)
    out = _out_dir(args)
    images, annotations = [], []
    for record in sorted(dataset.images, key=lambda r: r.image_id):
        raster = read_png(record.file_path)
        rect = _auto_crop_rect(raster.width, raster.height, cfg)
        raster, anns = crop(
            raster, rect, dataset.annotations_for(record.image_id), cfg.min_box_area
        )
        if cfg.enhance:
            raster = normalize_contrast(raster)
        if raster.channels == 1:
            raster = gray_to_rgb(raster)
        else:
            log.warning("%s: already 3-channel, duplication skipped", record.image_id)
        target = out / record.file_path.name
        write_png(raster, target)
        images.append(
            replace(
                record,
                file_path=target,
                width=raster.width,
                height=raster.height,
                channels=raster.channels,
            )
        )
        annotations.extend(anns)
    prepared = Dataset(images=images, annotations=annotations)
    write_voc(prepared, out)
    log.info("prepared %d images -> %s", len(prepared.images), out)
    return 0


def cmd_augment(args: argparse.Namespace, cfg: RunConfig) -> int:
    dataset = load_voc(args.dataset)
    out = _out_dir(args)
    plan = cfg.augment_plan()
    scaled = scale_dataset(dataset, plan, out, workers=cfg.workers)
    log.info(
        "scaled %d images x%d -> %d images in %s",
        len(dataset.images),
        plan.scale_factor,
        len(scaled.images),
        out,
    )
    name = Path(args.dataset).name or "dataset"
    print(
        bucket_report(
            [(name, dataset), (f"{plan.scale_factor}x scaled", scaled)], cfg.buckets()
        ).render()
    )
    return 0


def cmd_split(args: argparse.Namespace, cfg: RunConfig) -> int:
    if cfg.ratios is None:
        raise ValueError("split requires --ratios a,b,c (no default is assumed)")
    dataset = load_voc(args.dataset)
    out = _out_dir(args)
    parts = split(dataset, cfg.ratios, cfg.seed)
    for part in parts:
        write_voc(part, out / part.split_tag)
        log.info("%s: %d images, %d annotations", part.split_tag, len(part.images), len(part.annotations))
    return 0


def cmd_eval(args: argparse.Namespace, cfg: RunConfig) -> int:
    dataset = load_voc(args.dataset)
    dets = load_detections(args.detections)
    result = evaluate(dets, dataset, cfg.eval_config())
    run = args.name or Path(args.detections).stem
    summary = compare_runs([(run, result)])
    print(summary.render())
    if result.unknown_image_ids:
        log.warning("detections reference unknown images: %s", ", ".join(result.unknown_image_ids))
    if args.out:
        out = _out_dir(args)
        payload = {"run": run, **result.to_dict()}
        (out / "report.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        _write_csv(
            Path(out / "report.csv"),
            [("run", "metric", "iou", "bucket", "max_det", "value")] + result.csv_rows(run),
        )
    return 0


def cmd_compare(args: argparse.Namespace, cfg: RunConfig) -> int:
    results = []
    for path in args.reports:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        results.append((data.get("run", Path(path).stem), EvalResult.from_dict(data)))
    comparison = compare_runs(results)
    print(comparison.render())
    if args.out:
        out = _out_dir(args)
        _write_csv(out / "compare.csv", [("run",) + comparison.columns] + comparison.csv_rows())
        series_rows = [("run", "iou", "ap")]
        for name in comparison.names:
            for iou_thr, ap in comparison.series[name]:
                series_rows.append((name, f"{iou_thr:.2f}", ap))
        _write_csv(out / "series.csv", series_rows)
    return 0


def cmd_assess(args: argparse.Namespace, cfg: RunConfig) -> int:
    if cfg.threshold_mm is None:
        raise ValueError("assess requires --threshold-mm")
    dets = load_detections(args.detections)
    verdicts = assess(
        dets,
        threshold_mm=cfg.threshold_mm,
        min_score=cfg.min_score,
        c=cfg.calibration(),
        measure=cfg.measure,
    )
    counts = {"accept": 0, "reject": 0, "no-detection": 0}
    for v in verdicts:
        counts[v.decision] += 1
    print(
        f"{len(verdicts)} images: {counts['accept']} accept, "
        f"{counts['reject']} reject, {counts['no-detection']} no-detection "
        f"(threshold {cfg.threshold_mm} mm at {cfg.px_per_mm} px/mm)"
    )
    for v in verdicts:
        print(f"  {v.image_id}: {v.decision} (largest pore {v.largest_pore_mm:.3f} mm)")
    if args.out:
        _write_csv(Path(args.out), verdicts_csv_rows(verdicts))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weldkit",
        description="Weld-seam pore dataset preparation, augmentation, evaluation and QA verdicts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="INI config file; flags override file values")
        p.add_argument("--seed", type=int, help="master seed for all randomness")
        p.add_argument("--workers", type=int, help="parallel workers for per-image stages")
        p.add_argument("--out", help="output file or directory")

    p = sub.add_parser("stats", help="size-bucket histogram of a VOC dataset")
    common(p)
    p.add_argument("--dataset", required=True, help="VOC dataset directory")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("prep", help="crop, enhance and channel-duplicate a dataset")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--crop", help="crop window as x,y,w,h (default: centered 300x300 at the top)")
    p.add_argument("--no-enhance", action="store_true", help="skip contrast normalization")
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("augment", help="generate a k-times scaled dataset")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--factor", type=int, help="dataset scaling factor k (output has k*N images)")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("split", help="deterministic train/val/test split")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--ratios", help="train,val,test fractions summing to 1")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("eval", help="COCO-matrix evaluation of a detections file")
    common(p)
    p.add_argument("--dataset", required=True, help="ground-truth VOC dataset directory")
    p.add_argument("--detections", required=True, help="detections file (NDJSON)")
    p.add_argument("--iou-list", help="comma-separated IoU thresholds")
    p.add_argument("--buckets", help="size bucket areas as small_max,large_min (px^2)")
    p.add_argument("--name", help="run name used in reports (default: detections file stem)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="tabulate evaluation reports side by side")
    common(p)
    p.add_argument("--reports", nargs="+", required=True, help="report.json files from eval")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("assess", help="accept/reject verdicts from calibrated pore sizes")
    common(p)
    p.add_argument("--detections", required=True)
    p.add_argument("--threshold-mm", type=float, dest="threshold_mm", help="reject above this size")
    p.add_argument("--min-score", type=float, dest="min_score", help="ignore detections below")
    p.add_argument("--px-per-mm", type=float, dest="px_per_mm", help="calibration (default 40)")
    p.add_argument("--measure", choices=("longer_side", "shorter_side", "sqrt_area"))
    p.set_defaults(func=cmd_assess)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        return args.func(args, cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
