import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slicedet.boxes import BoundingBox, Detection, GroundTruthBox
from slicedet.metrics import (
    COCO_THRESHOLDS,
    EvalReport,
    average_precision,
    evaluate,
    latency_stats,
    map_50_95,
    match_detections,
    mean_average_precision,
)

from oracles import brute_force_ap


def det(x1, y1, x2, y2, score, cls=0):
    return Detection(BoundingBox(x1, y1, x2, y2), cls, score)


def gt(x1, y1, x2, y2, cls=0):
    return GroundTruthBox(BoundingBox(x1, y1, x2, y2), cls)


class TestMatching:
    def test_exact_hit(self):
        m = match_detections([det(0, 0, 10, 10, 0.9)], [gt(0, 0, 10, 10)], 0.5)
        assert m.tp == [True] and m.gt_matched == [True]

    def test_gt_consumed_once(self):
        m = match_detections([det(0, 0, 10, 10, 0.8), det(0, 0, 10, 10, 0.9)], [gt(0, 0, 10, 10)])
        assert [d.score for d in m.detections] == [0.9, 0.8]
        assert m.tp == [True, False]

    def test_below_threshold(self):
        m = match_detections([det(5, 0, 15, 10, 0.9)], [gt(0, 0, 10, 10)], 0.5)
        assert m.tp == [False]

    def test_inclusive_threshold(self):
        # IoU exactly 0.6
        m = match_detections([det(0, 0, 6, 10, 0.9)], [gt(0, 0, 10, 10)], 0.6)
        assert m.tp == [True]

    def test_prefers_best_unmatched(self):
        gts = [gt(0, 0, 10, 10), gt(2, 0, 12, 10)]
        m = match_detections([det(2, 0, 12, 10, 0.9), det(0, 0, 10, 10, 0.8)], gts)
        assert m.tp == [True, True]
        assert m.num_tp == 2


class TestAveragePrecision:
    def test_perfect(self):
        assert average_precision([True, True, True], 3) == 1.0

    def test_fp_then_tp(self):
        assert average_precision([False, True], 1) == 0.5

    def test_no_detections(self):
        assert average_precision([], 5) == 0.0

    def test_no_ground_truth(self):
        assert average_precision([False], 0, return_defined=True) == (0.0, True)
        assert average_precision([], 0, return_defined=True) == (0.0, False)

    def test_envelope(self):
        # precisions 1, 1/2, 2/3 ; envelope over recall steps 1/3, 1/3 -> 1, 2/3
        assert average_precision([True, False, True], 3) == pytest.approx(1 / 3 + 2 / 9, abs=1e-15)

    @given(st.lists(st.booleans(), max_size=12), st.integers(0, 8))
    def test_matches_oracle(self, flags, num_gt):
        if sum(flags) > num_gt:
            num_gt = sum(flags)
        assert abs(average_precision(flags, num_gt) - float(brute_force_ap(flags, num_gt))) <= 1e-12

    @given(st.lists(st.booleans(), max_size=12), st.integers(1, 8))
    def test_trailing_fp_never_helps(self, flags, num_gt):
        num_gt = max(num_gt, sum(flags))
        assert average_precision(flags + [False], num_gt) <= average_precision(flags, num_gt)


class TestMeanAP:
    def test_values(self):
        assert mean_average_precision([1.0, 0.5]) == 0.75
        assert mean_average_precision([0.42]) == 0.42
        assert mean_average_precision([0, 0, 0]) == 0

    def test_empty(self):
        with pytest.raises(ValueError):
            mean_average_precision([])

    def test_coco_thresholds(self):
        assert COCO_THRESHOLDS == (0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95)

    def test_map_50_95_mean(self):
        assert map_50_95(lambda t: 1.0) == 1.0
        assert map_50_95(lambda t: 0.0) == 0.0


class TestLatency:
    def test_constant(self):
        assert latency_stats([10, 10, 10]) == (10.0, 100.0)

    def test_mean_then_reciprocal(self):
        assert latency_stats([5, 15]) == (10.0, 100.0)

    def test_table_row(self):
        latency, fps = latency_stats([13.66])
        assert latency == 13.66
        assert round(fps, 1) == 73.2

    @pytest.mark.parametrize("bad", [[], [0.0], [-1.0, 2.0]])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            latency_stats(bad)


class TestEvaluate:
    def test_perfect(self):
        gts = [gt(0, 0, 10, 10, 0), gt(20, 20, 40, 40, 1)]
        dets = [det(0, 0, 10, 10, 0.9, 0), det(20, 20, 40, 40, 0.8, 1)]
        rep = evaluate([(dets, gts)])
        assert rep.map50 == 1.0 and rep.map50_95 == 1.0

    def test_iou_point_six(self):
        rep = evaluate([([det(0, 0, 6, 10, 0.9)], [gt(0, 0, 10, 10)])])
        assert [rep.map_by_threshold[t] for t in COCO_THRESHOLDS] == [1, 1, 1] + [0] * 7
        assert rep.map50_95 == pytest.approx(0.3, abs=1e-15)

    def test_no_detections(self):
        rep = evaluate([([], [gt(0, 0, 10, 10)])])
        assert rep.map50 == 0.0 and rep.map50_95 == 0.0

    def test_absent_class_policy(self):
        images = [([det(0, 0, 10, 10, 0.9, 0), det(50, 50, 60, 60, 0.9, 3)], [gt(0, 0, 10, 10, 0)])]
        assert evaluate(images).map50 == 1.0
        assert evaluate(images).classes_without_gt == [3]
        assert evaluate(images, include_absent_classes=True).map50 == 0.5

    def test_pooled_across_images(self):
        images = [([det(0, 0, 10, 10, 0.9)], [gt(0, 0, 10, 10)]),
                  ([det(0, 0, 10, 10, 0.95)], [gt(30, 30, 40, 40)])]
        # pooled order: FP (0.95), TP (0.9) over 2 GTs
        assert evaluate(images, (0.5,)).map50 == pytest.approx(0.25)

    def test_single_threshold_has_no_coco_mean(self):
        rep = evaluate([([], [gt(0, 0, 1, 1)])], (0.5,))
        assert rep.map50_95 is None

    def test_map50_95_is_mean_of_constituents(self):
        rng = np.random.default_rng(3)
        gts = [gt(x, y, x + 20, y + 20, int(c)) for x, y, c in rng.integers(0, 200, (8, 3)) % [200, 200, 3]]
        dets = [Detection(BoundingBox(g.box.x1 + j, g.box.y1, g.box.x2 + j, g.box.y2), g.class_id, 0.5 + 0.05 * j)
                for j, g in enumerate(gts)]
        rep = evaluate([(dets, gts)])
        assert abs(rep.map50_95 - sum(rep.map_by_threshold.values()) / 10) <= 1e-12

    def test_timings(self):
        rep = evaluate([([], [gt(0, 0, 1, 1)])], timings_ms=[4.0, 6.0])
        assert rep.latency_ms == 5.0 and rep.fps == 200.0

    def test_report_roundtrip(self):
        rep = evaluate([([det(0, 0, 6, 10, 0.9)], [gt(0, 0, 10, 10)])], timings_ms=[3.0])
        again = EvalReport.from_dict(rep.to_dict())
        assert again == rep
