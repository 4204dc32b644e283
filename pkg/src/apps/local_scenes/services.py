"""
Local scenes: every instance (primary) with its K nearest instances
(secondaries, by centroid distance) and a per-point weight mask.

Weight of the i-th closest secondary (1-based) is ``(m - i) / m`` with
``m = min(K, N_inst - 1)``; primary points weigh 1.0.

A refiner maps a local scene to the replacement point set of its primary.
The identity refiner keeps the primary as it is; ``AdjacentMergeRefiner``
absorbs touching same-class secondaries that carry enough weight, which
suppresses over-segmentation of large objects.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import structlog

from src.apps.clouds.models import InstanceProposal
from src.apps.spatial.services import SpatialIndex
from src.common.exceptions import NotFoundError, ValidationError
from src.common.types import RefinerName

logger = structlog.get_logger(__name__)

DEFAULT_K = 7


@dataclass(frozen=True, eq=False)
class LocalScene:
    primary_id: int
    secondary_ids: tuple[int, ...]
    point_indices: np.ndarray
    # instance each scene point comes from (primary or a secondary)
    point_instance: np.ndarray
    weights: np.ndarray
    semantic_scores: np.ndarray | None = None

    @property
    def primary_points(self) -> np.ndarray:
        return self.point_indices[self.point_instance == self.primary_id]

    def points_of(self, instance_id: int) -> np.ndarray:
        return self.point_indices[self.point_instance == instance_id]


type Refiner = Callable[[LocalScene], np.ndarray]


def nearest_instances(proposals: Sequence[InstanceProposal], primary_id: int, k: int) -> list[int]:
    """Ids of the ``min(K, N_inst - 1)`` instances closest to the primary; ties by lower id."""
    if k < 0:
        raise ValidationError(f"K must be >= 0, got {k}")
    if not 0 <= primary_id < len(proposals):
        raise NotFoundError(f"unknown primary instance {primary_id}")
    centroids = np.stack([p.centroid for p in proposals])
    d2 = ((centroids - centroids[primary_id]) ** 2).sum(axis=1)
    ids = np.arange(len(proposals))
    others = ids != primary_id
    order = np.lexsort((ids[others], d2[others]))
    return [int(i) for i in ids[others][order][: min(k, len(proposals) - 1)]]


def secondary_weight(rank: int, k: int, n_inst: int) -> Fraction:
    """Exact weight of the ``rank``-th closest secondary (1-based)."""
    m = min(k, n_inst - 1)
    if not 1 <= rank <= m:
        raise ValidationError(f"secondary rank must lie in [1, {m}], got {rank}")
    return Fraction(m - rank, m)


def _weights(
    point_instance: np.ndarray, secondary_ids: Sequence[int], k: int, n_inst: int
) -> np.ndarray:
    weights = np.ones(len(point_instance), dtype=np.float64)
    if n_inst <= 1:
        return weights
    for rank, sid in enumerate(secondary_ids, start=1):
        weights[point_instance == sid] = float(secondary_weight(rank, k, n_inst))
    return weights


def weight_mask(scene: LocalScene, k: int, n_inst: int) -> np.ndarray:
    return _weights(scene.point_instance, scene.secondary_ids, k, n_inst)


def build_local_scene(
    proposals: Sequence[InstanceProposal],
    primary_id: int,
    k: int,
    *,
    semantic_scores: np.ndarray | None = None,
) -> LocalScene:
    secondary_ids = nearest_instances(proposals, primary_id, k)
    members = [primary_id, *secondary_ids]
    point_indices = np.concatenate([proposals[i].point_indices for i in members])
    point_instance = np.concatenate(
        [np.full(proposals[i].size, i, dtype=np.int64) for i in members]
    )
    return LocalScene(
        primary_id=primary_id,
        secondary_ids=tuple(secondary_ids),
        point_indices=point_indices,
        point_instance=point_instance,
        weights=_weights(point_instance, secondary_ids, k, len(proposals)),
        semantic_scores=None if semantic_scores is None else semantic_scores[point_indices],
    )


def build_local_scenes(
    proposals: Sequence[InstanceProposal],
    k: int,
    *,
    semantic_scores: np.ndarray | None = None,
) -> list[LocalScene]:
    """One local scene per instance, in instance order."""
    scenes = [
        build_local_scene(proposals, i, k, semantic_scores=semantic_scores)
        for i in range(len(proposals))
    ]
    logger.debug("local_scenes_built", n_scenes=len(scenes), k=k)
    return scenes


# ── Refiners ────────────────────────────────────────────────────────────


def identity_refiner(scene: LocalScene) -> np.ndarray:
    return scene.primary_points


class AdjacentMergeRefiner:
    """
    Absorb secondaries of the primary's class whose weight is at least
    ``min_weight`` and whose closest point (original coordinates) lies
    within ``gap`` of the primary.
    """

    def __init__(
        self,
        points: np.ndarray,
        class_ids: Sequence[int],
        *,
        gap: float,
        min_weight: float = 0.5,
    ):
        if not gap > 0:
            raise ValidationError(f"merge gap must be > 0, got {gap}")
        self._points = points
        self._class_ids = list(class_ids)
        self._gap = gap
        self._min_weight = min_weight

    def __call__(self, scene: LocalScene) -> np.ndarray:
        primary = scene.primary_points
        keep = [primary]
        index = None
        for sid in scene.secondary_ids:
            if self._class_ids[sid] != self._class_ids[scene.primary_id]:
                continue
            members = scene.points_of(sid)
            weight = scene.weights[scene.point_instance == sid][0]
            if weight < self._min_weight:
                continue
            if index is None:
                index = SpatialIndex(self._points[primary])
            rows, _, _ = index.cross_pairs(self._points[members], self._gap)
            if rows.size:
                keep.append(members)
        return np.unique(np.concatenate(keep))


def make_refiner(
    name: RefinerName,
    *,
    points: np.ndarray,
    class_ids: Sequence[int],
    gap: float,
    min_weight: float,
) -> Refiner:
    if name == RefinerName.IDENTITY:
        return identity_refiner
    return AdjacentMergeRefiner(points, class_ids, gap=gap, min_weight=min_weight)


def refine(scene: LocalScene, refiner: Refiner) -> np.ndarray:
    """Run a refiner and hold it to the hook contract."""
    refined = np.unique(np.asarray(refiner(scene), dtype=np.int64))
    if refined.size == 0:
        raise ValidationError(f"refiner returned an empty set for instance {scene.primary_id}")
    if not np.isin(refined, scene.point_indices).all():
        raise ValidationError(
            f"refiner left the local scene of instance {scene.primary_id}"
        )
    return refined
