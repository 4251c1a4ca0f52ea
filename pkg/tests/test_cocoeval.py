from __future__ import annotations

import random

import numpy as np
import pytest

from conftest import make_dataset
from reference import ref_evaluate
from weldkit.cocoeval import (
    BUCKET_KEYS,
    SENTINEL,
    EvalConfig,
    EvalResult,
    compare_runs,
    default_iou_thresholds,
    evaluate,
    match,
    pr_curve,
)
from weldkit.dataset import Annotation, Detection
from weldkit.geometry import BBox


def det(image_id: str, box: BBox, score: float, label: str = "pore") -> Detection:
    return Detection(image_id=image_id, label=label, box=box, score=score)


def gt(image_id: str, box: BBox, label: str = "pore") -> Annotation:
    return Annotation(image_id=image_id, label=label, box=box)


def random_instance(rng: random.Random):
    """Small random detection problem over boxes inside 300x300."""

    def random_box() -> BBox:
        side_x = rng.randint(8, 120)
        side_y = rng.randint(8, 120)
        x0 = rng.randint(0, 300 - side_x)
        y0 = rng.randint(0, 300 - side_y)
        return BBox(float(x0), float(y0), float(x0 + side_x), float(y0 + side_y))

    def jitter(box: BBox) -> BBox:
        dx = rng.uniform(-0.2, 0.2) * box.width
        dy = rng.uniform(-0.2, 0.2) * box.height
        grow = rng.uniform(0.8, 1.2)
        w = box.width * grow
        h = box.height * grow
        x0 = min(max(box.x_min + dx, 0.0), 299.0)
        y0 = min(max(box.y_min + dy, 0.0), 299.0)
        return BBox(x0, y0, min(x0 + w, 300.0), min(y0 + h, 300.0))

    n_images = rng.randint(1, 5)
    boxes_per_image = {}
    dets = []
    for i in range(n_images):
        image_id = f"im{i}"
        gts = [random_box() for _ in range(rng.randint(0, 3))]
        boxes_per_image[image_id] = gts
        for _ in range(rng.randint(0, 4)):
            if gts and rng.random() < 0.7:
                box = jitter(rng.choice(gts))
            else:
                box = random_box()
            dets.append(det(image_id, box, round(rng.uniform(0.05, 1.0), 3)))
    dataset = make_dataset(boxes_per_image, size=(300, 300))
    return dets, dataset


def assert_results_match(result: EvalResult, ref: dict, tol: float = 1e-9):
    for t in result.iou_thresholds:
        for bucket in BUCKET_KEYS:
            assert abs(result.ap[t][bucket] - ref["ap"][t][bucket]) < tol, (t, bucket)
    for m in result.max_dets:
        for bucket in BUCKET_KEYS:
            assert abs(result.ar[m][bucket] - ref["ar"][m][bucket]) < tol, (m, bucket)
    assert abs(result.m_ap - ref["m_ap"]) < tol
    assert abs(result.ap_50 - ref["ap_50"]) < tol
    assert abs(result.m_ar_100 - ref["m_ar_100"]) < tol


class TestMatch:
    def test_single_true_positive(self):
        gts = [gt("i", BBox(0, 0, 10, 10))]
        dets = [det("i", BBox(0, 0, 10, 6), 0.9)]  # IoU 0.6
        m = match(dets, gts, 0.5)
        (idx, d, matched) = m.matches["i"][0]
        assert matched is gts[0]
        assert m.unmatched_gt["i"] == 0

    def test_higher_score_wins_single_gt(self):
        gts = [gt("i", BBox(0, 0, 10, 10))]
        dets = [
            det("i", BBox(0, 0, 10, 9), 0.8),
            det("i", BBox(0, 0, 10, 8), 0.9),
        ]
        m = match(dets, gts, 0.5)
        rows = m.matches["i"]
        assert rows[0][1].score == 0.9 and rows[0][2] is gts[0]
        assert rows[1][1].score == 0.8 and rows[1][2] is None

    def test_below_threshold_is_fp(self):
        gts = [gt("i", BBox(0, 0, 10, 10))]
        dets = [det("i", BBox(0, 5.5, 10, 15.5), 0.9)]  # IoU 0.45/1.55 < 0.5
        m = match(dets, gts, 0.5)
        assert m.matches["i"][0][2] is None
        assert m.unmatched_gt["i"] == 1

    def test_each_gt_matched_once(self):
        gts = [gt("i", BBox(0, 0, 10, 10)), gt("i", BBox(20, 0, 30, 10))]
        dets = [
            det("i", BBox(0, 0, 10, 10), 0.9),
            det("i", BBox(0, 0, 10, 10), 0.8),
            det("i", BBox(20, 0, 30, 10), 0.7),
        ]
        m = match(dets, gts, 0.5)
        matched = [row[2] for row in m.matches["i"] if row[2] is not None]
        assert len(matched) == len(set(id(g) for g in matched)) == 2


class TestPrCurve:
    def test_all_true_positives(self):
        gts = [gt("i", BBox(0, 0, 10, 10)), gt("i", BBox(20, 20, 30, 30))]
        dets = [det("i", g.box, 0.9 - k * 0.1) for k, g in enumerate(gts)]
        curve = pr_curve(match(dets, gts, 0.5), num_gt=2)
        assert np.all(curve == 1.0)

    def test_single_tp_of_single_gt(self):
        gts = [gt("i", BBox(0, 0, 10, 10))]
        dets = [det("i", BBox(0, 0, 10, 10), 0.7)]
        curve = pr_curve(match(dets, gts, 0.5), num_gt=1)
        # precision 1 at the single recall step covers all 101 points
        assert curve.shape == (101,)
        assert float(curve.mean()) == 1.0

    def test_no_detections(self):
        curve = pr_curve(match([], [gt("i", BBox(0, 0, 10, 10))], 0.5), num_gt=1)
        assert np.all(curve == 0.0)

    def test_zero_gt_is_undefined(self):
        assert pr_curve(match([det("i", BBox(0, 0, 5, 5), 0.5)], [], 0.5), num_gt=0) is None


class TestEvaluateKnownValues:
    def test_perfect_predictions(self):
        boxes = {
            "a": [BBox(0, 0, 30, 30), BBox(50, 50, 120, 120)],
            "b": [BBox(10, 10, 50, 50)],
        }
        dataset = make_dataset(boxes, size=(300, 300))
        dets = [det(i, b, 1.0) for i, bs in boxes.items() for b in bs]
        result = evaluate(dets, dataset)
        assert result.m_ap == 1.0
        assert result.m_ar_100 == 1.0

    def test_iou_060_single_detection(self):
        # brute-force reference gives ap_50 = 1.0, m_ap = 0.3, m_ar_100 = 0.3
        dataset = make_dataset({"i": [BBox(0, 0, 10, 10)]}, size=(300, 300))
        dets = [det("i", BBox(0, 0, 10, 6), 0.9)]
        result = evaluate(dets, dataset)
        assert result.ap_50 == 1.0
        assert abs(result.m_ap - 0.3) < 1e-12
        assert abs(result.m_ar_100 - 0.3) < 1e-12
        ref = ref_evaluate(dets, dataset.annotations, default_iou_thresholds())
        assert_results_match(result, ref)

    def test_score_floor_equals_prefiltering(self):
        dets, dataset = random_instance(random.Random(5))
        cfg = EvalConfig(score_floor=0.5)
        direct = evaluate(dets, dataset, cfg)
        filtered = evaluate([d for d in dets if d.score >= 0.5], dataset)
        for t in cfg.iou_thresholds:
            assert direct.ap[t] == filtered.ap[t]
        for m in cfg.max_dets:
            assert direct.ar[m] == filtered.ar[m]


class TestEvaluateAgainstReference:
    def test_random_instances(self):
        thresholds = default_iou_thresholds()
        rng = random.Random(2024)
        for _ in range(60):
            dets, dataset = random_instance(rng)
            result = evaluate(dets, dataset)
            ref = ref_evaluate(dets, dataset.annotations, thresholds)
            assert_results_match(result, ref)

    def test_unknown_image_detections_count_as_fp(self):
        dataset = make_dataset({"i": [BBox(0, 0, 40, 40)]}, size=(300, 300))
        clean = [det("i", BBox(0, 0, 40, 40), 0.9)]
        noisy = clean + [det("ghost", BBox(0, 0, 40, 40), 0.95)]
        res_clean = evaluate(clean, dataset)
        res_noisy = evaluate(noisy, dataset)
        assert res_noisy.unknown_image_ids == ("ghost",)
        assert res_noisy.m_ap < res_clean.m_ap
        ref = ref_evaluate(noisy, dataset.annotations, default_iou_thresholds())
        assert_results_match(res_noisy, ref)


class TestEvaluateProperties:
    def test_ap_non_increasing_in_threshold(self):
        rng = random.Random(31)
        for _ in range(30):
            dets, dataset = random_instance(rng)
            result = evaluate(dets, dataset)
            ts = result.iou_thresholds
            for bucket in BUCKET_KEYS:
                values = [result.ap[t][bucket] for t in ts if result.ap[t][bucket] != SENTINEL]
                assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))

    def test_ar_non_decreasing_in_max_det(self):
        rng = random.Random(32)
        for _ in range(30):
            dets, dataset = random_instance(rng)
            result = evaluate(dets, dataset)
            for bucket in BUCKET_KEYS:
                vals = [result.ar[m][bucket] for m in (1, 10, 100)]
                if SENTINEL in vals:
                    continue
                assert vals[0] <= vals[1] + 1e-12 <= vals[2] + 2e-12

    def test_ap50_at_least_map(self):
        rng = random.Random(33)
        for _ in range(30):
            dets, dataset = random_instance(rng)
            result = evaluate(dets, dataset)
            assert result.ap_50 >= result.m_ap - 1e-12

    def test_values_in_range_or_sentinel(self):
        rng = random.Random(34)
        for _ in range(20):
            dets, dataset = random_instance(rng)
            result = evaluate(dets, dataset)
            for cells in list(result.ap.values()) + list(result.ar.values()):
                for v in cells.values():
                    assert v == SENTINEL or 0.0 <= v <= 1.0

    def test_sentinel_iff_zero_gt(self):
        # dataset with only medium ground truth: small and large cells empty
        dataset = make_dataset({"i": [BBox(0, 0, 40, 40)]}, size=(300, 300))
        result = evaluate([det("i", BBox(0, 0, 40, 40), 0.9)], dataset)
        for t in result.iou_thresholds:
            assert result.ap[t]["small"] == SENTINEL
            assert result.ap[t]["large"] == SENTINEL
            assert result.ap[t]["medium"] != SENTINEL
            assert result.ap[t]["all"] != SENTINEL

    def test_trailing_zero_iou_fp_never_raises_ap(self):
        rng = random.Random(35)
        for _ in range(20):
            dets, dataset = random_instance(rng)
            lowest = min((d.score for d in dets), default=0.5)
            junk = det("im0", BBox(295, 295, 300, 300), max(lowest - 0.04, 0.0))
            before = evaluate(dets, dataset)
            after = evaluate(dets + [junk], dataset)
            for t in before.iou_thresholds:
                for bucket in BUCKET_KEYS:
                    if before.ap[t][bucket] == SENTINEL:
                        continue
                    assert after.ap[t][bucket] <= before.ap[t][bucket] + 1e-12

    def test_rank_invariance_of_scores(self):
        rng = random.Random(36)
        for _ in range(20):
            dets, dataset = random_instance(rng)
            squeezed = [
                Detection(d.image_id, d.label, d.box, round(0.5 * d.score + 0.2, 6))
                for d in dets
            ]
            a = evaluate(dets, dataset)
            b = evaluate(squeezed, dataset)
            for t in a.iou_thresholds:
                assert a.ap[t] == b.ap[t]
            for m in a.max_dets:
                assert a.ar[m] == b.ar[m]


class TestEvalConfigValidation:
    def test_thresholds_must_increase(self):
        with pytest.raises(ValueError):
            EvalConfig(iou_thresholds=(0.5, 0.5))

    def test_thresholds_in_unit_interval(self):
        with pytest.raises(ValueError):
            EvalConfig(iou_thresholds=(0.0, 0.5))

    def test_recall_points_minimum(self):
        with pytest.raises(ValueError):
            EvalConfig(recall_points=1)


class TestCompareRuns:
    def result(self, seed: int) -> EvalResult:
        dets, dataset = random_instance(random.Random(seed))
        return evaluate(dets, dataset)

    def test_single_run_table(self):
        comparison = compare_runs([("baseline", self.result(1))])
        assert comparison.names == ("baseline",)
        assert len(comparison.rows) == 1
        assert "m_ap" in comparison.render().splitlines()[0]

    def test_identical_results_identical_rows(self):
        r = self.result(2)
        comparison = compare_runs([("a", r), ("b", r)])
        assert comparison.rows[0] == comparison.rows[1]

    def test_five_run_series_shape(self):
        # the report layout used for baseline vs x2/x4/x6/x8 comparisons
        names = ["baseline", "x2", "x4", "x6", "x8"]
        comparison = compare_runs([(n, self.result(3)) for n in names])
        assert comparison.names == tuple(names)
        assert len(comparison.render().splitlines()) == 6
        for name in names:
            series = comparison.series[name]
            assert len(series) == 10
            assert all(0.5 <= iou_thr <= 0.95 for iou_thr, _ in series)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            compare_runs([])

    def test_round_trip_via_dict(self):
        r = self.result(4)
        back = EvalResult.from_dict(r.to_dict())
        assert back.ap == r.ap
        assert back.ar == r.ar
        assert back.m_ap == r.m_ap
