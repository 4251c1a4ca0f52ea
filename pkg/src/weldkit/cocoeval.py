"""COCO-matrix detector evaluation, written from scratch.

The protocol: detections are matched to ground truth greedily in descending
score order at each IoU threshold; average precision is the mean of the
interpolated precision envelope sampled at 101 recall points; average recall
is the matched ground-truth fraction with per-image detection caps, averaged
over the IoU thresholds. AP and AR are reported per size bucket using ignore
semantics: out-of-bucket ground truth is ignored, and detections matched to
ignored ground truth count neither as hits nor as false positives.

Cells with zero ground truth carry the sentinel value -1 and are excluded
from summary averages.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Annotation, Dataset, Detection
from .geometry import SizeBuckets, classify_size, iou

SENTINEL = -1.0
BUCKET_KEYS = ("all", "small", "medium", "large")


def default_iou_thresholds() -> tuple[float, ...]:
    # 0.50, 0.55, ..., 0.95; rounded so exact-ratio IoUs compare cleanly
    return tuple(round(0.50 + 0.05 * i, 2) for i in range(10))


@dataclass(frozen=True)
class EvalConfig:
    iou_thresholds: tuple[float, ...] = field(default_factory=default_iou_thresholds)
    recall_points: int = 101
    max_dets: tuple[int, ...] = (1, 10, 100)
    buckets: SizeBuckets = field(default_factory=SizeBuckets)
    score_floor: float = 0.0

    def __post_init__(self):
        ts = self.iou_thresholds
        if not ts or any(t2 <= t1 for t1, t2 in zip(ts, ts[1:])):
            raise ValueError(f"IoU thresholds must be strictly increasing, got {ts}")
        if not all(0 < t <= 1 for t in ts):
            raise ValueError(f"IoU thresholds must lie in (0, 1], got {ts}")
        if self.recall_points < 2:
            raise ValueError("need at least 2 recall points")
        if not self.max_dets or any(m < 1 for m in self.max_dets):
            raise ValueError(f"max_dets must be positive, got {self.max_dets}")
        if not 0.0 <= self.score_floor <= 1.0:
            raise ValueError(f"score floor must lie in [0, 1], got {self.score_floor}")


@dataclass
class MatchSet:
    """Greedy matching outcome for one IoU threshold.

    `matches` maps image_id to (input index, detection, matched ground truth
    or None) triples in descending score order; `unmatched_gt` counts ground
    truth left without a detection in each image.
    """

    iou_threshold: float
    matches: dict[str, list[tuple[int, Detection, Annotation | None]]]
    unmatched_gt: dict[str, int]


def _sorted_indices(dets: list[Detection]) -> list[int]:
    # descending score; ties keep input order
    return sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))


def _greedy_assign(
    ious: np.ndarray, gt_ignore: list[bool], thr: float
) -> list[int]:
    """Assign each detection (row, already in match order) a ground-truth index.

    Per detection: the unmatched non-ignored ground truth with the highest
    IoU >= thr wins; failing that, the best unmatched ignored one. Ties go to
    the lowest index. Returns -1 for unmatched detections.
    """
    n_det, n_gt = ious.shape
    taken = [False] * n_gt
    out = []
    for di in range(n_det):
        chosen = -1
        for pass_ignored in (False, True):
            best, best_v = -1, 0.0
            for gi in range(n_gt):
                if taken[gi] or gt_ignore[gi] != pass_ignored:
                    continue
                v = ious[di, gi]
                if v >= thr and v > best_v:
                    best, best_v = gi, v
            if best >= 0:
                chosen = best
                break
        if chosen >= 0:
            taken[chosen] = True
        out.append(chosen)
    return out


def _iou_matrix(dets: list[Detection], gts: list[Annotation]) -> np.ndarray:
    m = np.zeros((len(dets), len(gts)))
    for i, d in enumerate(dets):
        for j, g in enumerate(gts):
            m[i, j] = iou(d.box, g.box)
    return m


def match(dets: list[Detection], gts: list[Annotation], iou_thr: float) -> MatchSet:
    """Match detections to ground truth of the same image at one threshold.

    Labels are compared only against the same label; callers evaluating a
    single class typically prefilter instead.
    """
    image_ids = sorted({d.image_id for d in dets} | {g.image_id for g in gts})
    matches: dict[str, list[tuple[int, Detection, Annotation | None]]] = {}
    unmatched: dict[str, int] = {}
    for image_id in image_ids:
        img_dets = [(i, d) for i, d in enumerate(dets) if d.image_id == image_id]
        img_dets.sort(key=lambda t: (-t[1].score, t[0]))
        rows = []
        matched_gt_total = 0
        img_gts_all = [g for g in gts if g.image_id == image_id]
        for label in sorted({d.label for _, d in img_dets} | {g.label for g in img_gts_all}):
            lab_dets = [(i, d) for i, d in img_dets if d.label == label]
            lab_gts = [g for g in img_gts_all if g.label == label]
            ious = _iou_matrix([d for _, d in lab_dets], lab_gts)
            assigned = _greedy_assign(ious, [False] * len(lab_gts), iou_thr)
            for (idx, det), gi in zip(lab_dets, assigned):
                rows.append((idx, det, lab_gts[gi] if gi >= 0 else None))
            matched_gt_total += sum(1 for gi in assigned if gi >= 0)
        rows.sort(key=lambda t: (-t[1].score, t[0]))
        matches[image_id] = rows
        unmatched[image_id] = len(img_gts_all) - matched_gt_total
    return MatchSet(iou_threshold=iou_thr, matches=matches, unmatched_gt=unmatched)


def pr_curve(m: MatchSet, num_gt: int, recall_points: int = 101) -> np.ndarray | None:
    """Interpolated precision sampled at evenly spaced recall levels.

    Detections pool over images in descending score order, the precision
    envelope is made non-increasing in recall, and the envelope is sampled at
    `recall_points` levels. Returns None when there is no ground truth.
    """
    if num_gt < 0:
        raise ValueError("num_gt must be >= 0")
    if num_gt == 0:
        return None
    pooled = []
    for image_id in m.matches:
        for idx, det, gt in m.matches[image_id]:
            pooled.append((-det.score, idx, gt is not None))
    pooled.sort()
    tp = np.array([1.0 if hit else 0.0 for _, _, hit in pooled])
    return _sample_precision(tp, np.ones(len(pooled), dtype=bool), num_gt, recall_points)


def _sample_precision(
    tp: np.ndarray, keep: np.ndarray, num_gt: int, recall_points: int
) -> np.ndarray:
    """101-point interpolated precision from pooled, ordered detections."""
    tp = tp[keep]
    levels = np.linspace(0.0, 1.0, recall_points)
    if len(tp) == 0:
        return np.zeros(recall_points)
    cum_tp = np.cumsum(tp)
    cum_fp = np.cumsum(1.0 - tp)
    recalls = cum_tp / num_gt
    precisions = cum_tp / (cum_tp + cum_fp)
    envelope = np.maximum.accumulate(precisions[::-1])[::-1]
    inds = np.searchsorted(recalls, levels, side="left")
    out = np.zeros(recall_points)
    valid = inds < len(envelope)
    out[valid] = envelope[inds[valid]]
    return out


@dataclass
class EvalResult:
    """AP/AR cells plus the summary scalars of a single evaluation run."""

    iou_thresholds: tuple[float, ...]
    max_dets: tuple[int, ...]
    ap: dict[float, dict[str, float]]
    ar: dict[int, dict[str, float]]
    m_ap: float
    ap_50: float
    m_ar_100: float
    classes: tuple[str, ...]
    unknown_image_ids: tuple[str, ...] = ()

    def mean_ap(self, bucket: str = "all") -> float:
        vals = [self.ap[t][bucket] for t in self.iou_thresholds if self.ap[t][bucket] != SENTINEL]
        return float(np.mean(vals)) if vals else SENTINEL

    def ar_at(self, max_det: int | None = None, bucket: str = "all") -> float:
        max_det = max(self.max_dets) if max_det is None else max_det
        return self.ar[max_det][bucket]

    def to_dict(self) -> dict:
        return {
            "iou_thresholds": list(self.iou_thresholds),
            "max_dets": list(self.max_dets),
            "ap": {f"{t:.2f}": dict(cells) for t, cells in self.ap.items()},
            "ar": {str(m): dict(cells) for m, cells in self.ar.items()},
            "summary": {"m_ap": self.m_ap, "ap_50": self.ap_50, "m_ar_100": self.m_ar_100},
            "classes": list(self.classes),
            "unknown_image_ids": list(self.unknown_image_ids),
        }

    @staticmethod
    def from_dict(data: dict) -> "EvalResult":
        thresholds = tuple(float(t) for t in data["iou_thresholds"])
        max_dets = tuple(int(m) for m in data["max_dets"])
        return EvalResult(
            iou_thresholds=thresholds,
            max_dets=max_dets,
            ap={t: dict(data["ap"][f"{t:.2f}"]) for t in thresholds},
            ar={m: dict(data["ar"][str(m)]) for m in max_dets},
            m_ap=float(data["summary"]["m_ap"]),
            ap_50=float(data["summary"]["ap_50"]),
            m_ar_100=float(data["summary"]["m_ar_100"]),
            classes=tuple(data.get("classes", ())),
            unknown_image_ids=tuple(data.get("unknown_image_ids", ())),
        )

    def csv_rows(self, run: str) -> list[tuple]:
        rows = []
        for t in self.iou_thresholds:
            for bucket in BUCKET_KEYS:
                rows.append((run, "ap", f"{t:.2f}", bucket, "", self.ap[t][bucket]))
        for m in self.max_dets:
            for bucket in BUCKET_KEYS:
                rows.append((run, "ar", "", bucket, str(m), self.ar[m][bucket]))
        rows.append((run, "m_ap", "", "all", "", self.m_ap))
        rows.append((run, "ap_50", "0.50", "all", "", self.ap_50))
        rows.append((run, "m_ar_100", "", "all", str(max(self.max_dets)), self.m_ar_100))
        return rows


def _mean_or_sentinel(values: list[float]) -> float:
    vals = [v for v in values if v != SENTINEL]
    return float(np.mean(vals)) if vals else SENTINEL


def evaluate(dets: list[Detection], dataset: Dataset, cfg: EvalConfig | None = None) -> EvalResult:
    """Evaluate detections against a dataset's annotations.

    Scores below the configured floor are dropped up front. Detections on
    image ids missing from the dataset are kept as false positives and
    surfaced in the result's diagnostics. AP caps detections per image at the
    largest configured max_dets value; AR is reported per cap.
    """
    cfg = cfg or EvalConfig()
    dets = [d for d in dets if d.score >= cfg.score_floor]
    known_ids = {r.image_id for r in dataset.images}
    unknown = tuple(sorted({d.image_id for d in dets if d.image_id not in known_ids}))

    classes = tuple(sorted({a.label for a in dataset.annotations} | {d.label for d in dets}))
    cap_max = max(cfg.max_dets)

    # per class and image: sorted detections, ground truth, IoU matrix
    per_class: dict[str, list[dict]] = {c: [] for c in classes}
    for c in classes:
        c_dets = [(i, d) for i, d in enumerate(dets) if d.label == c]
        c_gts = [a for a in dataset.annotations if a.label == c]
        image_ids = sorted({d.image_id for _, d in c_dets} | {g.image_id for g in c_gts})
        for image_id in image_ids:
            img_dets = [(i, d) for i, d in c_dets if d.image_id == image_id]
            img_dets.sort(key=lambda t: (-t[1].score, t[0]))
            img_dets = img_dets[:cap_max]
            img_gts = [g for g in c_gts if g.image_id == image_id]
            per_class[c].append(
                {
                    "dets": img_dets,
                    "gts": img_gts,
                    "gt_buckets": [classify_size(g.box, cfg.buckets).value for g in img_gts],
                    "ious": _iou_matrix([d for _, d in img_dets], img_gts),
                }
            )

    ap_cells: dict[float, dict[str, list[float]]] = {
        t: {b: [] for b in BUCKET_KEYS} for t in cfg.iou_thresholds
    }
    ar_cells: dict[int, dict[str, list[float]]] = {
        m: {b: [] for b in BUCKET_KEYS} for m in cfg.max_dets
    }

    for c in classes:
        images = per_class[c]
        for bucket in BUCKET_KEYS:
            num_gt = sum(
                sum(1 for gb in img["gt_buckets"] if bucket in ("all", gb)) for img in images
            )
            recall_sums = {m: 0.0 for m in cfg.max_dets}
            ap_per_thr: list[float] = []
            for thr in cfg.iou_thresholds:
                pooled = []  # (-score, input index, is_tp, keep)
                matched_prefix = {m: 0 for m in cfg.max_dets}
                for img in images:
                    gt_ignore = [bucket not in ("all", gb) for gb in img["gt_buckets"]]
                    assigned = _greedy_assign(img["ious"], gt_ignore, thr)
                    for pos, ((idx, det), gi) in enumerate(zip(img["dets"], assigned)):
                        is_tp = gi >= 0 and not gt_ignore[gi]
                        ignored = gi >= 0 and gt_ignore[gi]
                        pooled.append((-det.score, idx, is_tp, not ignored))
                        if is_tp:
                            for m in cfg.max_dets:
                                if pos < m:
                                    matched_prefix[m] += 1
                if num_gt > 0:
                    pooled.sort()
                    tp = np.array([1.0 if t else 0.0 for _, _, t, _ in pooled])
                    keep = np.array([k for _, _, _, k in pooled], dtype=bool)
                    samples = _sample_precision(tp, keep, num_gt, cfg.recall_points)
                    ap_per_thr.append(float(samples.mean()))
                    for m in cfg.max_dets:
                        recall_sums[m] += matched_prefix[m] / num_gt
            if num_gt > 0:
                for thr, ap_val in zip(cfg.iou_thresholds, ap_per_thr):
                    ap_cells[thr][bucket].append(ap_val)
                for m in cfg.max_dets:
                    ar_cells[m][bucket].append(recall_sums[m] / len(cfg.iou_thresholds))

    ap = {
        t: {b: _mean_or_sentinel(ap_cells[t][b]) for b in BUCKET_KEYS}
        for t in cfg.iou_thresholds
    }
    ar = {
        m: {b: _mean_or_sentinel(ar_cells[m][b]) for b in BUCKET_KEYS} for m in cfg.max_dets
    }

    m_ap = _mean_or_sentinel([ap[t]["all"] for t in cfg.iou_thresholds])
    ap_50 = SENTINEL
    for t in cfg.iou_thresholds:
        if abs(t - 0.5) < 1e-9:
            ap_50 = ap[t]["all"]
    m_ar_100 = ar[100]["all"] if 100 in cfg.max_dets else SENTINEL

    return EvalResult(
        iou_thresholds=cfg.iou_thresholds,
        max_dets=cfg.max_dets,
        ap=ap,
        ar=ar,
        m_ap=m_ap,
        ap_50=ap_50,
        m_ar_100=m_ar_100,
        classes=classes,
        unknown_image_ids=unknown,
    )


@dataclass(frozen=True)
class RunComparison:
    """Side-by-side table of evaluation runs plus plot-ready AP series."""

    names: tuple[str, ...]
    columns: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]
    series: dict[str, list[tuple[float, float]]]  # run -> (iou, ap_all) points

    def render(self) -> str:
        table = [("run",) + self.columns]
        for name, row in zip(self.names, self.rows):
            table.append((name,) + tuple("" if v == SENTINEL else f"{v:.3f}" for v in row))
        widths = [max(len(str(r[c])) for r in table) for c in range(len(table[0]))]
        return "\n".join(
            "  ".join(str(cell).ljust(w) for cell, w in zip(row, widths)).rstrip()
            for row in table
        )

    def csv_rows(self) -> list[tuple]:
        out = []
        for name, row in zip(self.names, self.rows):
            out.append((name,) + row)
        return out


def compare_runs(results: list[tuple[str, EvalResult]]) -> RunComparison:
    """Tabulate summary and per-bucket metrics for one or more runs."""
    if not results:
        raise ValueError("need at least one result to compare")
    columns = (
        "m_ap",
        "ap_50",
        "m_ar_100",
        "ap_small",
        "ap_medium",
        "ap_large",
        "ar_small",
        "ar_medium",
        "ar_large",
    )
    rows = []
    series = {}
    for name, res in results:
        rows.append(
            (
                res.m_ap,
                res.ap_50,
                res.m_ar_100,
                res.mean_ap("small"),
                res.mean_ap("medium"),
                res.mean_ap("large"),
                res.ar_at(bucket="small"),
                res.ar_at(bucket="medium"),
                res.ar_at(bucket="large"),
            )
        )
        series[name] = [(t, res.ap[t]["all"]) for t in res.iou_thresholds]
    return RunComparison(
        names=tuple(name for name, _ in results),
        columns=columns,
        rows=tuple(rows),
        series=series,
    )
