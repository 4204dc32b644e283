import numpy as np
import pytest

from src.apps.clouds.models import InstanceProposal
from src.apps.clouds.selectors import GroundTruthInstance, ground_truth_instances
from src.apps.evaluation.services import (
    AP_OVERLAPS,
    all_point_ap,
    average_precision,
    dice_metric,
    evaluate_scene,
    foreground_coverage,
    mean_dice,
    offset_direction_metric,
    offset_distance_metric,
)
from src.apps.scoring.services import iou_matrix, pairwise_iou
from src.common.exceptions import ValidationError
from tests.helpers import blob_cloud

NAMES = ("floor", "chair", "table")


def _gt(*ranges, class_id=1):
    return [GroundTruthInstance(instance_id=i, class_id=class_id, point_indices=np.arange(*r))
            for i, r in enumerate(ranges)]


def _pred(indices, score=1.0, class_id=1):
    return InstanceProposal(point_indices=indices, class_id=class_id, centroid=[0, 0, 0], score=score)


class TestAveragePrecision:
    def test_perfect_predictions(self):
        gt = _gt((0, 10), (10, 20))
        preds = [_pred(g.point_indices) for g in gt]
        report = average_precision(preds, gt, class_names=NAMES)
        assert report.map == 1.0 and report.ap50 == 1.0 and report.ap25 == 1.0
        assert all(v == 1.0 for v in report.ap_by_overlap.values())
        assert report.mprec50 == 1.0 and report.mrec50 == 1.0

    def test_partial_overlap_counts_at_25_only(self):
        report = average_precision([_pred(range(4))], _gt((0, 10)), class_names=NAMES)
        assert report.ap25 == 1.0
        assert report.ap50 == 0.0

    def test_tp_fp_tp(self):
        gt = _gt((0, 10), (10, 20))
        # each true positive covers 9 of its 10 GT points: IoU 0.9
        preds = [_pred(range(9), 0.9), _pred(range(30, 40), 0.8), _pred(range(10, 19), 0.7)]
        ious = iou_matrix([p.point_indices for p in preds], [g.point_indices for g in gt])
        np.testing.assert_allclose(ious.max(axis=1), [0.9, 0.0, 0.9])

        report = average_precision(preds, gt, class_names=NAMES)
        # PR points (1, 1), (1/2, 1/2), (1, 2/3): 1/2 * 1 + 1/2 * 2/3
        assert report.ap50 == pytest.approx(5 / 6)
        assert report.ap_by_overlap["0.85"] == pytest.approx(5 / 6)
        assert report.ap_by_overlap["0.95"] == 0.0

    def test_envelope_on_flags(self):
        assert all_point_ap(np.array([1, 0, 1]), 2) == pytest.approx(5 / 6)
        assert all_point_ap(np.array([0, 0]), 1) == 0.0
        assert all_point_ap(np.zeros(0, int), 3) == 0.0

    def test_undefined_without_gt(self):
        with pytest.raises(ValidationError):
            all_point_ap(np.array([1]), 0)

    def test_monotone_in_overlap(self, rng):
        gt = _gt((0, 40), (40, 80), (80, 120))
        # every prediction stays inside one GT instance
        preds = [
            _pred(np.unique(rng.integers(lo, lo + 40, size=30)), float(rng.random()))
            for lo in (0, 0, 40, 40, 80, 80)
        ]
        report = average_precision(preds, gt, class_names=NAMES)
        values = [report.ap_by_overlap[k] for k in sorted(report.ap_by_overlap)]
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))

    def test_invariant_to_score_rescaling(self, rng):
        gt = _gt((0, 30), (30, 60))
        sets = [np.unique(rng.integers(0, 60, size=30)) for _ in range(6)]
        scores = rng.random(6)
        one = average_precision([_pred(s, sc) for s, sc in zip(sets, scores)], gt, class_names=NAMES)
        two = average_precision(
            [_pred(s, sc * 0.1) for s, sc in zip(sets, scores)], gt, class_names=NAMES
        )
        assert one.ap_by_overlap == two.ap_by_overlap

    def test_classes_without_gt_are_left_out(self):
        gt = _gt((0, 10))
        preds = [_pred(range(10)), _pred(range(20, 30), class_id=2)]
        report = average_precision(preds, gt, class_names=NAMES)
        assert [c.class_id for c in report.per_class] == [1]
        assert report.map == 1.0
        assert report.n_pred == 2

    def test_wrong_class_is_not_matched(self):
        report = average_precision([_pred(range(10), class_id=2)], _gt((0, 10)), class_names=NAMES)
        assert report.ap25 == 0.0

    def test_no_gt_at_all(self):
        report = average_precision([_pred(range(3))], [], class_names=NAMES)
        assert report.map is None and report.per_class == []

    def test_default_overlaps(self):
        assert AP_OVERLAPS[0] == 0.5 and AP_OVERLAPS[-1] == 0.95 and len(AP_OVERLAPS) == 10


class TestOffsetMetrics:
    def test_distance(self, rng):
        gt = rng.normal(size=(50, 3))
        mask = np.ones(50, bool)
        assert offset_distance_metric(gt, gt, mask) == 0.0
        shifted = gt + [0.1, 0.0, 0.0]
        assert offset_distance_metric(shifted, gt, mask) == pytest.approx(0.1)

    def test_direction(self, rng):
        gt = rng.normal(size=(50, 3))
        mask = np.ones(50, bool)
        assert offset_direction_metric(gt, gt, mask).value == pytest.approx(-1.0, abs=1e-9)
        assert offset_direction_metric(-gt, gt, mask).value == pytest.approx(1.0, abs=1e-9)
        orthogonal = np.cross(gt, [0.0, 0.0, 1.0])
        flat = gt * [1.0, 1.0, 0.0]
        assert offset_direction_metric(orthogonal, flat, mask).value == pytest.approx(0.0, abs=1e-9)

    def test_zero_vectors_are_excluded(self):
        gt = np.array([[1.0, 0, 0], [0.0, 0, 0]])
        result = offset_direction_metric(gt, gt, [True, True])
        assert result.excluded == 1 and result.value == pytest.approx(-1.0)

    def test_background_is_ignored(self):
        gt = np.array([[1.0, 0, 0], [1.0, 0, 0]])
        pred = np.array([[1.0, 0, 0], [9.0, 9, 9]])
        assert offset_distance_metric(pred, gt, [True, False]) == 0.0

    def test_empty_foreground(self):
        with pytest.raises(ValidationError, match="empty foreground"):
            offset_distance_metric(np.zeros((2, 3)), np.zeros((2, 3)), [False, False])


class TestDice:
    def test_examples(self):
        assert dice_metric(range(10), range(10)) == 1.0
        assert dice_metric(range(10), range(10, 20)) == 0.0
        assert dice_metric(range(10), range(5, 15)) == 0.5

    def test_empty_gt(self):
        with pytest.raises(ValidationError, match="empty gt"):
            dice_metric([1], [])

    def test_relation_to_iou(self, rng):
        for _ in range(100):
            a = np.unique(rng.integers(0, 40, size=int(rng.integers(1, 30))))
            b = np.unique(rng.integers(0, 40, size=int(rng.integers(1, 30))))
            iou = pairwise_iou(_pred(a), _pred(b))
            assert dice_metric(a, b) == pytest.approx(2 * iou / (1 + iou))

    def test_mean_dice(self):
        gt = _gt((0, 10), (10, 20))
        assert mean_dice([_pred(range(10))], gt) == pytest.approx(0.5)
        assert mean_dice([], gt) == 0.0
        assert mean_dice([_pred([0])], []) is None


class TestCoverage:
    def test_fraction_of_foreground(self):
        fg = np.array([True, True, True, True, False])
        assert foreground_coverage([_pred([0, 1]), _pred([1, 4])], fg) == 0.5
        assert foreground_coverage([], np.zeros(3, bool)) is None


class TestEvaluateScene:
    def test_oracle_predictions(self, rng, catalog):
        cloud = blob_cloud(rng, [[0, 0, 0], [3, 0, 0], [0, 3, 0]], [1, 2, 1], n_floor=50)
        preds = [
            InstanceProposal(point_indices=g.point_indices, class_id=g.class_id, centroid=[0, 0, 0])
            for g in ground_truth_instances(cloud)
        ]
        report = evaluate_scene(cloud, preds, catalog)
        assert report.map == 1.0
        assert report.n_gt == 3
        diagnostics = report.diagnostics
        assert diagnostics.offset_distance == 0.0
        assert diagnostics.offset_direction == pytest.approx(-1.0)
        assert diagnostics.mean_dice == 1.0
        assert diagnostics.coverage == 1.0

    def test_without_offsets(self, rng, catalog):
        cloud = blob_cloud(rng, [[0, 0, 0]], [1], offsets="none")
        report = evaluate_scene(cloud, [], catalog)
        assert report.map == 0.0
        assert report.diagnostics.offset_distance is None
        assert report.diagnostics.coverage == 0.0
