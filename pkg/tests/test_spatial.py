import numpy as np
import pytest

from src.apps.spatial.services import (
    SpatialIndex,
    radius_components,
    self_radius_counts,
    squared_distances,
)
from src.common.exceptions import ValidationError
from tests.helpers import brute_components, brute_counts, same_partition


class TestRadiusQuery:
    def test_matches_linear_scan(self, rng):
        points = rng.uniform(0, 1, size=(1500, 3))
        index = SpatialIndex(points)
        for _ in range(200):
            center = rng.uniform(0, 1, size=3)
            r = rng.uniform(0.01, 0.3)
            expected = np.flatnonzero(squared_distances(points, center) <= r * r)
            np.testing.assert_array_equal(index.radius_query(center, r), expected)

    def test_ball_is_closed(self):
        index = SpatialIndex([[0.0, 0, 0], [0.5, 0, 0], [0.5000001, 0, 0]])
        np.testing.assert_array_equal(index.radius_query([0, 0, 0], 0.5), [0, 1])

    def test_duplicates_are_kept(self):
        index = SpatialIndex(np.zeros((4, 3)))
        np.testing.assert_array_equal(index.radius_query([0, 0, 0], 0.0), [0, 1, 2, 3])

    def test_negative_radius(self):
        with pytest.raises(ValidationError):
            SpatialIndex(np.zeros((2, 3))).radius_query([0, 0, 0], -1.0)

    def test_empty_index(self):
        assert SpatialIndex(np.zeros((0, 3))).radius_query([0, 0, 0], 1.0).size == 0


class TestKnnQuery:
    def test_matches_linear_scan(self, rng):
        # integer grid: many exact distance ties
        points = rng.integers(0, 6, size=(400, 3)).astype(np.float64)
        index = SpatialIndex(points)
        for _ in range(200):
            center = rng.integers(0, 6, size=3).astype(np.float64)
            k = int(rng.integers(1, 30))
            d2 = squared_distances(points, center)
            expected = np.lexsort((np.arange(len(points)), d2))[:k]
            got = index.knn_query(center, k)
            assert [i for i, _ in got] == expected.tolist()
            np.testing.assert_allclose([d for _, d in got], np.sqrt(d2[expected]))

    def test_k_larger_than_cloud(self):
        assert len(SpatialIndex(np.eye(3)).knn_query([0, 0, 0], 10)) == 3

    def test_nearest_prefers_lower_index(self):
        index = SpatialIndex([[1.0, 0, 0], [-1.0, 0, 0]])
        idx, d2 = index.nearest([[0.0, 0, 0]])
        assert idx.tolist() == [0] and d2.tolist() == [1.0]


class TestCrossPairs:
    def test_matches_linear_scan(self, rng):
        points = rng.uniform(0, 1, size=(300, 3))
        centers = rng.uniform(0, 1, size=(120, 3))
        rows, cols, d2 = SpatialIndex(points).cross_pairs(centers, 0.15, chunk=50)
        diff = centers[:, None, :] - points[None, :, :]
        expected = np.argwhere((diff * diff).sum(axis=-1) <= 0.15**2)
        got = np.stack([rows, cols], axis=1)
        assert {tuple(p) for p in got} == {tuple(p) for p in expected}
        np.testing.assert_array_equal(d2, squared_distances(points[cols], centers[rows]))


class TestRadiusGraphs:
    def test_counts_match_brute_force(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 2000))
            points = rng.uniform(0, 1, size=(n, 3))
            r = float(rng.uniform(0.02, 0.2))
            np.testing.assert_array_equal(self_radius_counts(points, r), brute_counts(points, r))

    def test_counts_with_collapsed_points(self, rng):
        # shifted clouds under exact offsets: whole instances on one coordinate
        points = np.concatenate(
            [
                np.zeros((300, 3)),
                np.full((200, 3), 0.04),
                rng.normal(0.5, 0.02, size=(100, 3)),
                np.array([[0.04, 0.0, 0.0], [0.0, 0.0, 0.04]]),
            ]
        )
        np.testing.assert_array_equal(self_radius_counts(points, 0.04), brute_counts(points, 0.04))

    def test_density_example(self):
        # six points within r of the first one, one outside: density 7
        ring = np.array(
            [[0, 0, 0], [0.01, 0, 0], [0, 0.02, 0], [0, 0, 0.03], [0.02, 0.02, 0], [-0.04, 0, 0],
             [0, -0.01, 0.01], [0.1, 0.1, 0.1]]
        )
        assert self_radius_counts(ring, 0.04)[0] == 7

    def test_components_match_union_find(self, rng):
        for _ in range(20):
            points = rng.uniform(0, 1, size=(int(rng.integers(2, 600)), 3))
            r = float(rng.uniform(0.03, 0.12))
            n, labels = radius_components(points, r)
            expected = brute_components(points, r)
            assert n == len(np.unique(expected))
            assert same_partition(labels, expected)

    def test_zero_radius_graph(self):
        with pytest.raises(ValidationError):
            self_radius_counts(np.zeros((3, 3)), 0.0)
