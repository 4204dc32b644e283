import numpy as np
import pydantic
import pytest

from src.apps.clouds.models import InstanceProposal, LabeledCloud
from src.apps.clouds.schemas import ClassCatalog
from src.apps.clouds.selectors import (
    bounding_sphere_diameter,
    class_statistics,
    foreground_mask,
    ground_truth_instances,
)
from src.apps.clouds.services import apply_offsets, centroid, ground_truth_offsets
from src.common.exceptions import ValidationError
from tests.helpers import blob_cloud


class TestLabeledCloud:
    def test_rejects_misaligned_columns(self):
        with pytest.raises(ValidationError, match="semantic has 2 entries"):
            LabeledCloud(points=np.zeros((3, 3)), semantic=[0, 1])

    def test_rejects_non_finite_points(self):
        pts = np.zeros((2, 3))
        pts[1, 0] = np.nan
        with pytest.raises(ValidationError, match="finite"):
            LabeledCloud(points=pts, semantic=[0, 0])

    @pytest.mark.parametrize(
        ("gt_instance", "gt_semantic", "message"),
        [
            ([0, -2], [1, 1], "gt_instance"),
            ([0, -1], [1, -1], "gt_semantic"),
        ],
    )
    def test_rejects_negative_ground_truth(self, gt_instance, gt_semantic, message):
        with pytest.raises(ValidationError, match=message):
            LabeledCloud(
                points=np.zeros((2, 3)),
                semantic=[1, 0],
                gt_instance=gt_instance,
                gt_semantic=gt_semantic,
            )

    def test_arrays_are_read_only_copies(self):
        pts = np.zeros((2, 3))
        cloud = LabeledCloud(points=pts, semantic=[0, 1])
        pts[0, 0] = 5.0
        assert cloud.points[0, 0] == 0.0
        with pytest.raises(ValueError):
            cloud.points[0, 0] = 1.0

    def test_permuted_moves_every_column(self, rng):
        cloud = blob_cloud(rng, [(0, 0, 0), (3, 0, 0)], [1, 2], n_per=10)
        order = rng.permutation(cloud.n_points)
        moved = cloud.permuted(order)
        np.testing.assert_array_equal(moved.points, cloud.points[order])
        np.testing.assert_array_equal(moved.offsets, cloud.offsets[order])
        np.testing.assert_array_equal(moved.gt_instance, cloud.gt_instance[order])


class TestCentroidAndOffsets:
    def test_centroid_is_mean(self):
        np.testing.assert_array_equal(centroid([[0, 0, 0], [2, 4, 6]]), [1, 2, 3])

    def test_centroid_of_empty_instance(self):
        with pytest.raises(ValidationError, match="empty instance"):
            centroid(np.zeros((0, 3)))

    def test_gt_offsets_collapse_instances(self, rng):
        cloud = blob_cloud(rng, [(0, 0, 0), (3, 1, 0)], [1, 1], n_per=50, n_floor=20)
        offsets = ground_truth_offsets(cloud)
        shifted = cloud.points + offsets
        for gid in (0, 1):
            members = cloud.gt_instance == gid
            np.testing.assert_allclose(
                shifted[members], np.broadcast_to(cloud.points[members].mean(axis=0), (50, 3)), atol=1e-12
            )
        np.testing.assert_array_equal(offsets[cloud.gt_instance == -1], 0.0)

    def test_apply_offsets_needs_offsets(self):
        with pytest.raises(ValidationError):
            apply_offsets(LabeledCloud(points=np.zeros((1, 3)), semantic=[0]))


class TestClassCatalog:
    def test_needs_a_foreground_class(self):
        with pytest.raises(pydantic.ValidationError):
            ClassCatalog(names=("floor",), background=(True,), mean_size=(0.0,))

    def test_foreground_size_must_be_positive(self):
        with pytest.raises(pydantic.ValidationError, match="chair"):
            ClassCatalog(names=("floor", "chair"), background=(True, False), mean_size=(0.0, 0.0))

    def test_id_helpers(self, catalog):
        np.testing.assert_array_equal(catalog.foreground_ids, [1, 2])
        np.testing.assert_array_equal(catalog.background_ids, [0])
        assert catalog.radius_for(2) == 1.5
        assert catalog.name_of(1) == "chair"


class TestSelectors:
    def test_foreground_mask_uses_predicted_classes(self, catalog):
        cloud = LabeledCloud(points=np.zeros((3, 3)), semantic=[0, 1, 2])
        np.testing.assert_array_equal(foreground_mask(cloud, catalog), [False, True, True])

    def test_foreground_mask_rejects_unknown_ids(self, catalog):
        cloud = LabeledCloud(points=np.zeros((1, 3)), semantic=[7])
        with pytest.raises(ValidationError):
            foreground_mask(cloud, catalog)

    def test_gt_instance_class_is_majority(self):
        cloud = LabeledCloud(
            points=np.zeros((4, 3)),
            semantic=[0, 0, 0, 0],
            gt_instance=[0, 0, 0, -1],
            gt_semantic=[2, 1, 2, 0],
        )
        (inst,) = ground_truth_instances(cloud)
        assert inst.class_id == 2
        np.testing.assert_array_equal(inst.point_indices, [0, 1, 2])

    def test_bounding_sphere_diameter(self):
        pts = np.array([[1.0, 0, 0], [-1.0, 0, 0]])
        assert bounding_sphere_diameter(pts) == 2.0

    def test_class_statistics_nan_for_absent_classes(self, rng):
        cloud = blob_cloud(rng, [(0, 0, 0)], [1], n_per=40)
        sizes, counts = class_statistics(cloud, 3)
        assert np.isnan(sizes[2]) and np.isnan(counts[0])
        assert counts[1] == 40


class TestInstanceProposal:
    def test_sorts_indices(self):
        p = InstanceProposal(point_indices=[5, 1, 3], class_id=1, centroid=[0, 0, 0])
        np.testing.assert_array_equal(p.point_indices, [1, 3, 5])
        assert p.size == 3

    @pytest.mark.parametrize(
        "indices, score, message",
        [
            ([], 1.0, "empty"),
            ([1, 1], 1.0, "duplicate"),
            ([1], 1.5, "score"),
        ],
    )
    def test_invalid(self, indices, score, message):
        with pytest.raises(ValidationError, match=message):
            InstanceProposal(point_indices=indices, class_id=1, centroid=[0, 0, 0], score=score)
