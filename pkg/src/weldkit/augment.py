"""Seeded offline dataset scaling.

Every generated image gets two augmentation ops from distinct families,
sampled from a stream derived only from (master_seed, image_id, replica), so
replicas can be generated in any order or in parallel and still come out
byte-identical. Photometric ops leave boxes untouched; geometric ops
propagate and clip them.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .dataset import Annotation, Dataset, ImageRecord, SizeHistogram, size_histogram
from .geometry import AffineMap, SizeBuckets
from .raster import (
    DEFAULT_MIN_BOX_AREA,
    Raster,
    add_gaussian_noise,
    adjust_contrast,
    affine_warp,
    encode_png,
    flip,
    gaussian_blur,
    read_png,
)
from .voc import write_voc

log = logging.getLogger(__name__)

PROVENANCE_FILE = "provenance.ndjson"
MAX_RESAMPLE_ATTEMPTS = 10

# op families and default parameter ranges; translate values are fractions
# of the image dimension
DEFAULT_RANGES: dict[str, dict[str, tuple[float, float]]] = {
    "scale_translate": {
        "scale_x": (0.8, 1.2),
        "scale_y": (0.8, 1.2),
        "translate_x": (-0.1, 0.1),
        "translate_y": (-0.1, 0.1),
    },
    "flip_h": {},
    "flip_v": {},
    "blur": {"sigma": (0.5, 2.0)},
    "contrast": {"factor": (0.6, 1.4)},
    "noise": {"sigma": (2.0, 12.0)},
}

GEOMETRIC_FAMILIES = ("scale_translate", "flip_h", "flip_v")


@dataclass(frozen=True)
class AugmentOp:
    kind: str
    params: dict[str, float]

    def as_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}


@dataclass(frozen=True)
class AugmentPlan:
    scale_factor: int
    master_seed: int
    op_pool: tuple[str, ...] = tuple(DEFAULT_RANGES)
    ranges: dict[str, dict[str, tuple[float, float]]] = field(
        default_factory=lambda: {k: dict(v) for k, v in DEFAULT_RANGES.items()}
    )
    combo_size: int = 2
    min_box_area: float = DEFAULT_MIN_BOX_AREA

    def __post_init__(self):
        if self.scale_factor < 1:
            raise ValueError(f"scale factor must be >= 1, got {self.scale_factor}")
        if self.combo_size != 2:
            raise ValueError("combo size is fixed at 2")
        if len(set(self.op_pool)) < 2:
            raise ValueError("op pool needs at least 2 distinct families")
        for fam in self.op_pool:
            if fam not in self.ranges:
                raise ValueError(f"unknown op family {fam!r}")
            for name, (lo, hi) in self.ranges[fam].items():
                if lo > hi:
                    raise ValueError(f"{fam}.{name}: empty range ({lo}, {hi})")


@dataclass(frozen=True)
class Provenance:
    image_id: str
    source_image_id: str
    replica: int
    ops: tuple[AugmentOp, ...]
    seed: int | None = None
    attempt: int = 0

    def as_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "source_image_id": self.source_image_id,
            "replica": self.replica,
            "attempt": self.attempt,
            "seed": self.seed,
            "ops": [op.as_dict() for op in self.ops],
        }


def derive_seed(master_seed: int, image_id: str, replica: int, attempt: int = 0) -> int:
    """Stable 64-bit sub-seed; independent of process hash randomization."""
    key = f"{master_seed}|{image_id}|{replica}|{attempt}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


def sample_combo(
    plan: AugmentPlan, image_id: str, replica: int, attempt: int = 0
) -> tuple[tuple[AugmentOp, AugmentOp], int]:
    """Draw two ops from distinct families plus the per-image seed used."""
    seed = derive_seed(plan.master_seed, image_id, replica, attempt)
    rng = random.Random(seed)
    families = rng.sample(list(plan.op_pool), 2)
    ops = []
    for fam in families:
        params: dict[str, float] = {}
        for name in sorted(plan.ranges[fam]):
            lo, hi = plan.ranges[fam][name]
            params[name] = rng.uniform(lo, hi)
        if fam == "noise":
            params["seed"] = rng.getrandbits(32)
        ops.append(AugmentOp(kind=fam, params=params))
    return (ops[0], ops[1]), seed


def apply_op(
    r: Raster,
    anns: list[Annotation],
    op: AugmentOp,
    min_box_area: float = DEFAULT_MIN_BOX_AREA,
) -> tuple[Raster, list[Annotation]]:
    if op.kind == "scale_translate":
        m = AffineMap.translation(
            op.params["translate_x"] * r.width, op.params["translate_y"] * r.height
        ).compose(
            AffineMap.scaling(
                op.params["scale_x"], op.params["scale_y"], cx=r.width / 2.0, cy=r.height / 2.0
            )
        )
        return affine_warp(r, m, anns, min_box_area=min_box_area)
    if op.kind == "flip_h":
        return flip(r, "horizontal", anns)
    if op.kind == "flip_v":
        return flip(r, "vertical", anns)
    if op.kind == "blur":
        return gaussian_blur(r, op.params["sigma"]), anns
    if op.kind == "contrast":
        return adjust_contrast(r, op.params["factor"]), anns
    if op.kind == "noise":
        return add_gaussian_noise(r, op.params["sigma"], int(op.params["seed"])), anns
    raise ValueError(f"unknown op kind {op.kind!r}")


def augment_one(
    r: Raster,
    anns: list[Annotation],
    combo: tuple[AugmentOp, AugmentOp],
    *,
    source_image_id: str,
    replica: int,
    seed: int | None = None,
    attempt: int = 0,
    min_box_area: float = DEFAULT_MIN_BOX_AREA,
) -> tuple[Raster, list[Annotation], Provenance]:
    """Apply a sampled combo in order and record how the image was made."""
    out_r, out_a = r, list(anns)
    for op in combo:
        out_r, out_a = apply_op(out_r, out_a, op, min_box_area=min_box_area)
    prov = Provenance(
        image_id=replica_id(source_image_id, replica),
        source_image_id=source_image_id,
        replica=replica,
        ops=tuple(combo),
        seed=seed,
        attempt=attempt,
    )
    return out_r, out_a, prov


def replica_id(source_image_id: str, replica: int) -> str:
    return source_image_id if replica == 0 else f"{source_image_id}_aug{replica}"


def generate_replica(
    r: Raster, anns: list[Annotation], plan: AugmentPlan, image_id: str, replica: int
) -> tuple[Raster, list[Annotation], Provenance]:
    """Generate one augmented replica, re-sampling when all boxes drop out.

    Up to MAX_RESAMPLE_ATTEMPTS combos are tried with successive sub-seeds;
    if every attempt loses all boxes, the last one is emitted box-free with a
    warning.
    """
    last = None
    for attempt in range(MAX_RESAMPLE_ATTEMPTS):
        combo, seed = sample_combo(plan, image_id, replica, attempt)
        out_r, out_a, prov = augment_one(
            r,
            anns,
            combo,
            source_image_id=image_id,
            replica=replica,
            seed=seed,
            attempt=attempt,
            min_box_area=plan.min_box_area,
        )
        if out_a or not anns:
            return out_r, out_a, prov
        last = (out_r, out_a, prov)
    log.warning(
        "%s replica %d: all boxes lost after %d augmentation attempts, emitting box-free",
        image_id,
        replica,
        MAX_RESAMPLE_ATTEMPTS,
    )
    return last


def _generate_for_image(
    record: ImageRecord, anns: list[Annotation], plan: AugmentPlan
) -> list[tuple[int, ImageRecord, list[Annotation], Provenance, bytes | None]]:
    """Produce the original plus its replicas; None bytes mean 'copy source'."""
    out = [
        (
            0,
            record,
            list(anns),
            Provenance(
                image_id=record.image_id,
                source_image_id=record.image_id,
                replica=0,
                ops=(),
            ),
            None,
        )
    ]
    if plan.scale_factor == 1:
        return out
    raster = read_png(record.file_path)
    for rep in range(1, plan.scale_factor):
        out_r, out_a, prov = generate_replica(raster, anns, plan, record.image_id, rep)
        new_id = replica_id(record.image_id, rep)
        new_record = ImageRecord(
            image_id=new_id,
            file_path=record.file_path.parent / f"{new_id}.png",
            width=out_r.width,
            height=out_r.height,
            channels=out_r.channels,
        )
        new_anns = [replace(a, image_id=new_id) for a in out_a]
        out.append((rep, new_record, new_anns, prov, encode_png(out_r)))
    return out


def scale_dataset(
    d: Dataset, plan: AugmentPlan, out_dir: str | Path, workers: int = 1
) -> Dataset:
    """Write a scaled dataset: originals plus (k-1) replicas per image.

    The output directory receives PNGs, VOC annotation XMLs and a provenance
    sidecar. Output is assembled in (source image, replica) order, so results
    are byte-identical for any worker count.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    sources = sorted(d.images, key=lambda r: r.image_id)
    anns_by_image: dict[str, list[Annotation]] = {r.image_id: [] for r in sources}
    for a in d.annotations:
        anns_by_image[a.image_id].append(a)

    def work(record: ImageRecord):
        return _generate_for_image(record, anns_by_image[record.image_id], plan)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_image = list(pool.map(work, sources))
    else:
        per_image = [work(r) for r in sources]

    images: list[ImageRecord] = []
    annotations: list[Annotation] = []
    provenance: list[Provenance] = []
    for source, generated in zip(sources, per_image):
        for rep, record, anns, prov, png_bytes in sorted(generated, key=lambda g: g[0]):
            target = out_dir / (
                source.file_path.name if rep == 0 else f"{record.image_id}.png"
            )
            if png_bytes is None:
                if target.resolve() != source.file_path.resolve():
                    shutil.copyfile(source.file_path, target)
            else:
                target.write_bytes(png_bytes)
            images.append(replace(record, file_path=target))
            annotations.extend(anns)
            provenance.append(prov)

    result = Dataset(images=images, annotations=annotations)
    write_voc(result, out_dir)
    with open(out_dir / PROVENANCE_FILE, "w", encoding="utf-8") as fh:
        for prov in provenance:
            fh.write(json.dumps(prov.as_dict(), sort_keys=True) + "\n")
    return result


@dataclass(frozen=True)
class BucketReport:
    buckets: SizeBuckets
    rows: tuple[tuple[str, SizeHistogram], ...]

    def render(self) -> str:
        side_small = int(self.buckets.small_max_area**0.5)
        side_large = int(self.buckets.large_min_area**0.5)
        headers = (
            "Dataset",
            f"Small Pores (pore<{side_small}^2px)",
            f"Medium Pores ({side_small}^2px<pore<{side_large}^2px)",
            f"Large Pores (pore>{side_large}^2px)",
        )
        table = [headers]
        for name, hist in self.rows:
            table.append((name, str(hist.small), str(hist.medium), str(hist.large)))
        widths = [max(len(row[c]) for row in table) for c in range(4)]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in table]
        return "\n".join(lines)

    def csv_rows(self) -> list[tuple[str, int, int, int]]:
        return [(name, h.small, h.medium, h.large) for name, h in self.rows]


def bucket_report(
    datasets: list[tuple[str, Dataset]], k: SizeBuckets | None = None
) -> BucketReport:
    """Small/medium/large annotation counts per dataset, one row each."""
    k = k or SizeBuckets()
    return BucketReport(
        buckets=k, rows=tuple((name, size_histogram(d, k)) for name, d in datasets)
    )
