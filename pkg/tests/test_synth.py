import numpy as np
import pytest
from scipy.spatial import cKDTree

from src.apps.clouds.selectors import ground_truth_instances
from src.apps.clouds.services import apply_offsets, centroid, ground_truth_offsets
from src.apps.clustering.services import distance_cluster
from src.apps.synth import primitives
from src.apps.synth.schemas import ClassSpec, NoiseModel, SceneConfig
from src.apps.synth.services import (
    apply_noise,
    generate_scene,
    perturb_offsets,
    perturb_semantics,
    provenance,
    synthetic_catalog,
)
from src.common.exceptions import InfeasibleSceneError
from src.common.types import NoiseKind, Primitive

CABINET = ClassSpec(name="cabinet", primitive=Primitive.BOX, size=(0.6, 0.5, 1.2), size_jitter=0.0)
LAMP = ClassSpec(name="lamp", primitive=Primitive.SPHERE, size=(0.5, 0.5, 0.5))


def _twin_pair(seed: int = 0) -> SceneConfig:
    return SceneConfig(
        n_objects=2,
        classes=(CABINET,),
        adjacency_probability=1.0,
        adjacency_gap=0.0,
        room_extent=(4.0, 4.0),
        floor=False,
        seed=seed,
    )


class TestPrimitives:
    @pytest.mark.parametrize("primitive", list(Primitive))
    def test_samples_stay_in_footprint(self, rng, primitive):
        size = np.array([0.6, 0.4, 0.8])
        pts = primitives.sample_surface(rng, primitive, np.array([2.0, 2.0]), size, 500)
        half = primitives.footprint_half_extents(primitive, size)
        assert pts.shape == (500, 3)
        assert (np.abs(pts[:, :2] - 2.0) <= half + 1e-9).all()
        assert pts[:, 2].min() >= -1e-9 and pts[:, 2].max() <= size[2] + 1e-9

    def test_box_area(self):
        assert primitives.surface_area(Primitive.BOX, np.array([1.0, 2.0, 3.0])) == pytest.approx(22.0)

    def test_floor_is_flat(self, rng):
        floor = primitives.sample_floor(rng, (3.0, 2.0), 100)
        assert (floor[:, 2] == 0.0).all()
        assert floor[:, 0].max() <= 3.0 and floor[:, 1].max() <= 2.0


class TestGenerateScene:
    def test_deterministic(self):
        one = generate_scene(SceneConfig(seed=3))
        two = generate_scene(SceneConfig(seed=3))
        np.testing.assert_array_equal(one.points, two.points)
        np.testing.assert_array_equal(one.gt_instance, two.gt_instance)

    def test_seed_changes_scene(self):
        one = generate_scene(SceneConfig(seed=3))
        two = generate_scene(SceneConfig(seed=4))
        assert one.n_points != two.n_points or not np.array_equal(one.points, two.points)

    def test_single_sphere(self):
        cloud = generate_scene(SceneConfig(n_objects=1, classes=(LAMP,), floor=False))
        instances = ground_truth_instances(cloud)
        assert len(instances) == 1 and instances[0].class_id == 1

    def test_floor_is_background(self):
        cloud = generate_scene(SceneConfig(n_objects=2, seed=1))
        floor = cloud.gt_semantic == 0
        assert floor.any()
        assert (cloud.gt_instance[floor] == -1).all()
        assert (cloud.gt_instance[~floor] >= 0).all()

    def test_oracle_channels(self):
        cloud = generate_scene(SceneConfig(n_objects=3, seed=2))
        np.testing.assert_array_equal(cloud.semantic, cloud.gt_semantic)
        np.testing.assert_array_equal(cloud.offsets, ground_truth_offsets(cloud))

    def test_min_points_per_instance(self):
        cloud = generate_scene(SceneConfig(n_objects=4, surface_density=1.0, min_points_per_instance=70))
        assert all(len(g.point_indices) == 70 for g in ground_truth_instances(cloud))

    def test_contact_pair_touches(self):
        cloud = generate_scene(_twin_pair())
        a, b = ground_truth_instances(cloud)
        distance, _ = cKDTree(cloud.points[b.point_indices]).query(cloud.points[a.point_indices])
        assert distance.min() <= 0.04

    def test_gap_keeps_pair_apart(self):
        config = _twin_pair().model_copy(update={"adjacency_gap": 0.5})
        cloud = generate_scene(config)
        a, b = ground_truth_instances(cloud)
        distance, _ = cKDTree(cloud.points[b.point_indices]).query(cloud.points[a.point_indices])
        assert distance.min() > 0.4

    def test_infeasible_room(self):
        config = SceneConfig(n_objects=40, classes=(CABINET,), room_extent=(2.0, 2.0), max_retries=5)
        with pytest.raises(InfeasibleSceneError, match="could not place"):
            generate_scene(config)

    def test_object_larger_than_room(self):
        config = SceneConfig(n_objects=1, classes=(CABINET,), room_extent=(0.3, 0.3))
        with pytest.raises(InfeasibleSceneError, match="does not fit"):
            generate_scene(config)

    def test_floor_name_is_reserved(self):
        with pytest.raises(ValueError, match="reserved"):
            SceneConfig(classes=(ClassSpec(name="floor", primitive=Primitive.BOX, size=(1, 1, 1)),))

    def test_provenance(self):
        block = provenance(SceneConfig(seed=9), NoiseModel(sigma=0.1))
        assert block["generator"] == "numpy.PCG64" and block["seed"] == 9
        assert block["config"]["noise"]["sigma"] == 0.1


class TestCatalog:
    def test_names_and_background(self):
        config = SceneConfig()
        catalog = synthetic_catalog(config)
        assert catalog.names[0] == "floor" and catalog.background[0]
        assert catalog.names[1:] == tuple(c.name for c in config.classes)

    def test_sizes_are_stable_across_scenes(self):
        config = SceneConfig(n_objects=10, class_mix={"table": 1.0}, room_extent=(12.0, 12.0))
        sizes = [
            synthetic_catalog(config, generate_scene(config.model_copy(update={"seed": s}))).mean_size[2]
            for s in range(3)
        ]
        assert np.ptp(sizes) < 0.1 * np.mean(sizes)

    def test_absent_class_falls_back_to_nominal(self):
        config = SceneConfig(n_objects=1, class_mix={"lamp": 1.0})
        catalog = synthetic_catalog(config, generate_scene(config))
        assert catalog.mean_size[1] == pytest.approx(np.linalg.norm([0.5, 0.5, 0.9]))


class TestNoise:
    @pytest.fixture(scope="class")
    def scene(self):
        config = SceneConfig(seed=5)
        cloud = generate_scene(config)
        return cloud, synthetic_catalog(config, cloud)

    def test_exact_noise_is_identity(self, scene):
        cloud, catalog = scene
        noisy = apply_noise(cloud, NoiseModel(), catalog)
        np.testing.assert_array_equal(noisy.offsets, cloud.offsets)
        np.testing.assert_array_equal(noisy.semantic, cloud.semantic)

    def test_gaussian_error_norm(self, scene):
        cloud, _ = scene
        offsets = perturb_offsets(cloud, NoiseModel(sigma=0.05, seed=1))
        fg = cloud.gt_instance >= 0
        error = np.linalg.norm(offsets - ground_truth_offsets(cloud), axis=1)[fg]
        # E|N(0, s^2 I_3)| = 2 s sqrt(2 / pi)
        assert error.mean() == pytest.approx(0.05 * 2 * np.sqrt(2 / np.pi), rel=0.05)

    def test_background_offsets_untouched(self, scene):
        cloud, _ = scene
        offsets = perturb_offsets(cloud, NoiseModel(sigma=0.05))
        bg = cloud.gt_instance < 0
        np.testing.assert_array_equal(offsets[bg], ground_truth_offsets(cloud)[bg])

    def test_heavy_tail_has_outliers(self, scene):
        cloud, _ = scene
        fg = cloud.gt_instance >= 0
        gt = ground_truth_offsets(cloud)
        normal = perturb_offsets(cloud, NoiseModel(sigma=0.02))
        heavy = perturb_offsets(cloud, NoiseModel(kind=NoiseKind.HEAVY_TAIL, sigma=0.02))
        assert np.abs(heavy - gt)[fg].max() > np.abs(normal - gt)[fg].max()

    def test_noise_seed(self, scene):
        cloud, _ = scene
        one = perturb_offsets(cloud, NoiseModel(sigma=0.05, seed=1))
        two = perturb_offsets(cloud, NoiseModel(sigma=0.05, seed=2))
        assert not np.array_equal(one, two)
        np.testing.assert_array_equal(one, perturb_offsets(cloud, NoiseModel(sigma=0.05, seed=1)))

    @pytest.mark.parametrize("rate", [0.0, 1.0])
    def test_semantic_flip_extremes(self, scene, rate):
        cloud, catalog = scene
        labels = perturb_semantics(cloud, rate, 0, catalog=catalog)
        fg = cloud.gt_semantic != 0
        kept = labels[fg] == cloud.gt_semantic[fg]
        assert kept.all() if rate == 0.0 else not kept.any()
        np.testing.assert_array_equal(labels[~fg], 0)

    def test_semantic_flip_rate(self, scene):
        cloud, catalog = scene
        labels = perturb_semantics(cloud, 0.1, 0, catalog=catalog)
        fg = cloud.gt_semantic != 0
        rate = (labels[fg] != cloud.gt_semantic[fg]).mean()
        assert 0.09 <= rate <= 0.11
        assert (labels[fg] != 0).all()


class TestBoundaryPull:
    @pytest.fixture(scope="class")
    def pair(self):
        cloud = generate_scene(_twin_pair(seed=1))
        noise = NoiseModel(kind=NoiseKind.BOUNDARY_PULL, boundary_pull=1.0)
        return cloud, cloud.with_predictions(offsets=perturb_offsets(cloud, noise))

    def test_far_points_still_reach_centroid(self, pair):
        clean, pulled = pair
        moved = np.linalg.norm(pulled.offsets - clean.offsets, axis=1) > 1e-12
        assert moved.any() and not moved.all()
        np.testing.assert_allclose(
            apply_offsets(pulled)[~moved], apply_offsets(clean)[~moved], atol=1e-12
        )

    def test_pulled_instances_touch_in_shifted_space(self, pair):
        clean, pulled = pair
        a, b = ground_truth_instances(clean)
        shifted = apply_offsets(pulled)
        distance, _ = cKDTree(shifted[b.point_indices]).query(shifted[a.point_indices])
        assert distance.min() <= 0.04

    def test_pulled_points_spread_along_the_contact_face(self, pair):
        clean, pulled = pair
        moved = np.linalg.norm(pulled.offsets - clean.offsets, axis=1) > 1e-12
        shifted = apply_offsets(pulled)[moved]
        a, b = ground_truth_instances(clean)
        ca, cb = (centroid(clean.points[g.point_indices]) for g in (a, b))
        midpoint = (ca + cb) / 2
        assert np.linalg.norm(shifted - midpoint, axis=1).max() > 0.1

    def test_distance_clustering_merges_the_pair(self, pair):
        _, pulled = pair
        result = distance_cluster(apply_offsets(pulled), pulled.semantic, 0.04, min_points=50)
        assert result.n_instances == 1

    def test_pull_needs_its_kind(self, pair):
        clean, _ = pair
        noise = NoiseModel(kind=NoiseKind.GAUSSIAN, boundary_pull=1.0)
        np.testing.assert_array_equal(perturb_offsets(clean, noise), ground_truth_offsets(clean))

    def test_isolated_objects_are_not_pulled(self):
        config = _twin_pair().model_copy(update={"adjacency_gap": 1.0})
        cloud = generate_scene(config)
        noise = NoiseModel(kind=NoiseKind.BOUNDARY_PULL, boundary_pull=1.0)
        np.testing.assert_array_equal(perturb_offsets(cloud, noise), ground_truth_offsets(cloud))
