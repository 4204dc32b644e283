"""
Synthetic scenes and the oracle predictor.

Scenes are rooms of axis-aligned primitives sampled on their surfaces, with
an optional floor plane as the background class (class id 0). Object class
``i`` of ``SceneConfig.classes`` becomes class id ``i + 1``.

Every random draw goes through numpy's PCG64 bit generator, so a given
(config, seed) reproduces the same cloud bit for bit on any platform.
"""

from dataclasses import dataclass

import numpy as np
import structlog
from scipy.spatial import cKDTree

from src.apps.clouds.models import BACKGROUND_INSTANCE, LabeledCloud
from src.apps.clouds.schemas import ClassCatalog
from src.apps.clouds.selectors import class_statistics, ground_truth_instances
from src.apps.clouds.services import ground_truth_offsets
from src.apps.synth import primitives
from src.apps.synth.schemas import ClassSpec, NoiseModel, SceneConfig
from src.common.exceptions import InfeasibleSceneError, ValidationError
from src.common.types import NoiseKind

logger = structlog.get_logger(__name__)

GENERATOR_NAME = "numpy.PCG64"
BACKGROUND_NAME = "floor"

# sub-stream ids for the noise model
_OFFSET_STREAM = 0
_SEMANTIC_STREAM = 1


def make_rng(seed: int, *streams: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64([seed, *streams] if streams else seed))


def provenance(config: SceneConfig, noise: NoiseModel | None = None) -> dict:
    """Provenance block recorded in cloud file headers."""
    return {
        "generator": GENERATOR_NAME,
        "seed": config.seed,
        "config": {
            "scene": config.model_dump(mode="json"),
            "noise": None if noise is None else noise.model_dump(mode="json"),
        },
    }


# ═════════════════════════════════════════════════════════════════════════
#  Placement
# ═════════════════════════════════════════════════════════════════════════


@dataclass
class _Placed:
    class_index: int
    size: np.ndarray
    center: np.ndarray
    half: np.ndarray
    twin: int | None = None


def _jittered_size(rng: np.random.Generator, spec: ClassSpec) -> np.ndarray:
    jitter = rng.uniform(-spec.size_jitter, spec.size_jitter, size=3)
    return np.asarray(spec.size) * (1.0 + jitter)


def _clear(center, half, placed: list[_Placed], separation: float, skip: int | None = None) -> bool:
    for i, other in enumerate(placed):
        if i == skip:
            continue
        reach = half + other.half + separation
        if np.all(np.abs(center - other.center) < reach):
            return False
    return True


def _inside(center, half, extent: np.ndarray) -> bool:
    return bool(np.all(center - half >= 0.0) and np.all(center + half <= extent))


def _twin_partner(placed: list[_Placed], config: SceneConfig) -> int | None:
    """Most recent untwinned object whose class may get a twin."""
    for i in range(len(placed) - 1, -1, -1):
        name = config.classes[placed[i].class_index].name
        if placed[i].twin is None and (
            config.adjacency_classes is None or name in config.adjacency_classes
        ):
            return i
    return None


def _place_twin(rng, partner: int, placed: list[_Placed], config: SceneConfig) -> _Placed | None:
    base = placed[partner]
    extent = np.asarray(config.room_extent)
    axes = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    for direction in axes[rng.permutation(4)]:
        step = 2.0 * base.half + config.adjacency_gap
        center = base.center + direction * step
        if _inside(center, base.half, extent) and _clear(
            center, base.half, placed, config.min_separation, skip=partner
        ):
            return _Placed(
                class_index=base.class_index,
                size=base.size.copy(),
                center=center,
                half=base.half.copy(),
                twin=partner,
            )
    return None


def _place_free(rng, index: int, placed: list[_Placed], config: SceneConfig, weights) -> _Placed:
    extent = np.asarray(config.room_extent)
    class_index = int(rng.choice(len(config.classes), p=weights))
    spec = config.classes[class_index]
    size = _jittered_size(rng, spec)
    half = primitives.footprint_half_extents(spec.primitive, size)
    if np.any(2.0 * half > extent):
        raise InfeasibleSceneError(f"object {index} ({spec.name}) does not fit a {tuple(extent)} room")
    for _ in range(config.max_retries):
        center = rng.uniform(half, extent - half)
        if _clear(center, half, placed, config.min_separation):
            return _Placed(class_index=class_index, size=size, center=center, half=half)
    raise InfeasibleSceneError(
        f"could not place object {index} ({spec.name}) after {config.max_retries} attempts: "
        f"{len(placed)} objects already in a {tuple(extent)} room "
        f"with min_separation={config.min_separation}"
    )


def _class_weights(config: SceneConfig) -> np.ndarray:
    if config.class_mix is None:
        return np.full(len(config.classes), 1.0 / len(config.classes))
    weights = np.array([config.class_mix.get(c.name, 0.0) for c in config.classes])
    return weights / weights.sum()


def _layout(rng: np.random.Generator, config: SceneConfig) -> list[_Placed]:
    weights = _class_weights(config)
    placed: list[_Placed] = []
    for index in range(config.n_objects):
        obj = None
        if placed and config.adjacency_probability > 0 and rng.random() < config.adjacency_probability:
            partner = _twin_partner(placed, config)
            if partner is not None:
                obj = _place_twin(rng, partner, placed, config)
                if obj is not None:
                    placed[partner].twin = len(placed)
        if obj is None:
            obj = _place_free(rng, index, placed, config, weights)
        placed.append(obj)
    return placed


# ═════════════════════════════════════════════════════════════════════════
#  Scene generation
# ═════════════════════════════════════════════════════════════════════════


def generate_scene(config: SceneConfig) -> LabeledCloud:
    """
    Surface-sampled scene with ground truth. Predicted channels are set to
    the exact oracle: semantics = GT semantics, offsets = GT offsets.
    """
    rng = make_rng(config.seed)
    layout = _layout(rng, config)

    chunks, instance, semantic = [], [], []
    for obj_id, obj in enumerate(layout):
        spec = config.classes[obj.class_index]
        area = primitives.surface_area(spec.primitive, obj.size)
        n = max(config.min_points_per_instance, int(round(area * config.surface_density)))
        chunks.append(primitives.sample_surface(rng, spec.primitive, obj.center, obj.size, n))
        instance.append(np.full(n, obj_id, dtype=np.int64))
        semantic.append(np.full(n, obj.class_index + 1, dtype=np.int64))

    if config.floor and config.floor_density > 0:
        n_floor = int(round(config.room_extent[0] * config.room_extent[1] * config.floor_density))
        chunks.append(primitives.sample_floor(rng, config.room_extent, n_floor))
        instance.append(np.full(n_floor, BACKGROUND_INSTANCE, dtype=np.int64))
        semantic.append(np.zeros(n_floor, dtype=np.int64))

    gt_instance = np.concatenate(instance)
    gt_semantic = np.concatenate(semantic)
    cloud = LabeledCloud(
        points=np.concatenate(chunks),
        semantic=gt_semantic,
        gt_instance=gt_instance,
        gt_semantic=gt_semantic,
    )
    cloud = cloud.with_predictions(offsets=ground_truth_offsets(cloud))
    logger.info(
        "scene_generated",
        seed=config.seed,
        n_points=cloud.n_points,
        n_objects=len(layout),
        n_twins=sum(1 for o in layout if o.twin is not None) // 2,
    )
    return cloud


def synthetic_catalog(config: SceneConfig, cloud: LabeledCloud | None = None) -> ClassCatalog:
    """
    Catalog of a synthetic scene: floor (background) plus the object classes.
    Mean sizes and counts come from the cloud's ground truth; classes absent
    from the cloud fall back to nominal values of their spec.
    """
    n_classes = len(config.classes) + 1
    if cloud is not None and cloud.has_ground_truth:
        sizes, counts = class_statistics(cloud, n_classes)
    else:
        sizes = counts = np.full(n_classes, np.nan)

    mean_size, mean_count = [0.0], [0.0]
    for i, spec in enumerate(config.classes, start=1):
        nominal = np.asarray(spec.size)
        mean_size.append(float(sizes[i]) if np.isfinite(sizes[i]) else float(np.linalg.norm(nominal)))
        if np.isfinite(counts[i]):
            mean_count.append(float(counts[i]))
        else:
            area = primitives.surface_area(spec.primitive, nominal)
            mean_count.append(float(max(config.min_points_per_instance, round(area * config.surface_density))))

    return ClassCatalog(
        names=(BACKGROUND_NAME, *(c.name for c in config.classes)),
        background=(True, *(False for _ in config.classes)),
        mean_size=tuple(mean_size),
        mean_count=tuple(mean_count),
    )


# ═════════════════════════════════════════════════════════════════════════
#  Oracle predictor noise
# ═════════════════════════════════════════════════════════════════════════


def _boundary_pull(cloud: LabeledCloud, offsets: np.ndarray, noise: NoiseModel) -> int:
    """
    Move points near a same-class neighbor instance toward the plane that
    bisects the two centroids (it contains their midpoint). With ``c`` the
    point's own centroid, ``q`` its projection on that plane and ``d`` its
    distance to the neighbor, the fully pulled position sits on the segment
    from ``q`` to ``c`` at depth ``min(d, |c - q|)`` from ``q``; ``strength``
    blends between ``c`` and that position. Depth equals ``d``, so the
    pulled points keep roughly their surface spacing. Updates ``offsets``
    in place.

    The target is the bisector plane, not the midpoint itself: points spread
    along the contact face instead of collapsing onto a single location.
    """
    instances = ground_truth_instances(cloud)
    if len(instances) < 2 or noise.boundary_pull == 0.0:
        return 0
    band = noise.pull_band
    pts = cloud.points
    centers = [pts[g.point_indices].mean(axis=0) for g in instances]
    lows = [pts[g.point_indices].min(axis=0) for g in instances]
    highs = [pts[g.point_indices].max(axis=0) for g in instances]
    trees: dict[int, cKDTree] = {}

    n_pulled = 0
    for a, inst in enumerate(instances):
        members = inst.point_indices
        best_d = np.full(len(members), np.inf)
        best_b = np.full(len(members), -1, dtype=np.int64)
        for b, other in enumerate(instances):
            if b == a or other.class_id != inst.class_id:
                continue
            gap = np.maximum(lows[b] - highs[a], lows[a] - highs[b])
            if np.linalg.norm(np.maximum(gap, 0.0)) > band:
                continue
            if not np.linalg.norm(centers[b] - centers[a]) > 0:
                continue
            if b not in trees:
                trees[b] = cKDTree(pts[other.point_indices])
            d, _ = trees[b].query(pts[members], k=1, distance_upper_bound=band)
            closer = d < best_d
            best_d[closer] = d[closer]
            best_b[closer] = b

        for b in np.unique(best_b[best_b >= 0]):
            rows = np.flatnonzero(best_b == b)
            p = pts[members[rows]]
            axis = centers[b] - centers[a]
            axis /= np.linalg.norm(axis)
            midpoint = (centers[a] + centers[b]) / 2.0
            q = p - ((p - midpoint) @ axis)[:, None] * axis
            inward = centers[a] - q
            length = np.linalg.norm(inward, axis=1)
            depth = np.minimum(best_d[rows], length)
            with np.errstate(invalid="ignore", divide="ignore"):
                step = np.where(length > 0, depth / length, 1.0)
            pulled = q + step[:, None] * inward
            target = centers[a] + noise.boundary_pull * (pulled - centers[a])
            offsets[members[rows]] = target - p
            n_pulled += len(rows)
    return n_pulled


def perturb_offsets(cloud: LabeledCloud, noise: NoiseModel) -> np.ndarray:
    """
    Predicted offsets: GT offsets (after the boundary pull, for that kind)
    plus i.i.d. per-axis noise of scale sigma on foreground points. Heavy
    tail draws Student-t noise; the other kinds draw Gaussian noise.
    """
    if not cloud.has_ground_truth:
        raise ValidationError("perturb_offsets needs ground truth")
    offsets = ground_truth_offsets(cloud)
    fg = cloud.gt_instance != BACKGROUND_INSTANCE

    n_pulled = 0
    if noise.kind == NoiseKind.BOUNDARY_PULL:
        n_pulled = _boundary_pull(cloud, offsets, noise)

    if noise.sigma > 0 and fg.any():
        rng = make_rng(noise.seed, _OFFSET_STREAM)
        if noise.kind == NoiseKind.HEAVY_TAIL:
            draws = rng.standard_t(noise.tail_dof, size=(cloud.n_points, 3))
        else:
            draws = rng.standard_normal(size=(cloud.n_points, 3))
        offsets[fg] += noise.sigma * draws[fg]

    logger.debug(
        "offsets_perturbed",
        kind=str(noise.kind),
        sigma=noise.sigma,
        n_pulled=n_pulled,
        seed=noise.seed,
    )
    return offsets


def perturb_semantics(
    cloud: LabeledCloud, error_rate: float, seed: int, *, catalog: ClassCatalog
) -> np.ndarray:
    """
    Each foreground point independently switches, with probability
    ``error_rate``, to a uniformly drawn *other* foreground class.
    Background points keep their label.
    """
    if not 0.0 <= error_rate <= 1.0:
        raise ValidationError(f"error_rate must lie in [0, 1], got {error_rate}")
    truth = cloud.gt_semantic if cloud.gt_semantic is not None else cloud.semantic
    labels = truth.copy()
    if error_rate == 0.0:
        return labels

    fg_ids = catalog.foreground_ids
    if len(fg_ids) < 2:
        raise ValidationError("semantic noise needs at least two foreground classes")
    rng = make_rng(seed, _SEMANTIC_STREAM)
    flip = rng.random(cloud.n_points) < error_rate
    flip &= ~catalog.is_background(truth)
    rows = np.flatnonzero(flip)

    # draw among the F-1 wrong classes, skipping over the true one
    position = np.searchsorted(fg_ids, truth[rows])
    draw = rng.integers(0, len(fg_ids) - 1, size=len(rows))
    labels[rows] = fg_ids[draw + (draw >= position)]
    logger.debug("semantics_perturbed", error_rate=error_rate, n_flipped=len(rows), seed=seed)
    return labels


def apply_noise(cloud: LabeledCloud, noise: NoiseModel, catalog: ClassCatalog) -> LabeledCloud:
    """The cloud with its predicted channels replaced by the noisy oracle."""
    return cloud.with_predictions(
        semantic=perturb_semantics(cloud, noise.semantic_error_rate, noise.seed, catalog=catalog),
        offsets=perturb_offsets(cloud, noise),
    )
