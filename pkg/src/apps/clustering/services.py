"""
Semantic-guided grouping of shifted points.

``group_hps`` is the binary-clustering grouping: connected components over
HPs where an edge joins two HPs of the same predicted class within
``link_radius``. With ``link_radius = r_d`` HPs are exactly DBSCAN core
points and grouping is core-point connectivity.

``distance_cluster`` is the plain distance-clustering baseline: the same
same-class linking over every foreground point, with small components
dropped as ignored points.

Classes are independent, so each class is clustered as its own task; the
merge and the id assignment (by smallest member index) are sequential, so
the partition does not depend on the thread schedule.
"""

from dataclasses import dataclass

import numpy as np
import structlog

from src.apps.clouds.models import as_points
from src.apps.spatial.services import radius_components
from src.common.exceptions import ValidationError
from src.common.parallel import ordered_map

logger = structlog.get_logger(__name__)

UNASSIGNED = -1
DEFAULT_MIN_POINTS = 50


@dataclass(frozen=True, eq=False)
class PreliminaryAssignment:
    # per-point instance id, UNASSIGNED for points outside the grouped set
    instance_ids: np.ndarray
    # class of every instance, indexed by instance id
    class_ids: np.ndarray
    # points dropped by the min-size filter (distance clustering only)
    ignored: np.ndarray | None = None

    @property
    def n_instances(self) -> int:
        return len(self.class_ids)

    def members(self, instance_id: int) -> np.ndarray:
        return np.flatnonzero(self.instance_ids == instance_id)


def canonical_labels(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """
    Relabel components 0..n-1 in order of their smallest member index;
    entries equal to UNASSIGNED stay unassigned.
    """
    labels = np.asarray(labels, dtype=np.int64)
    out = np.full(len(labels), UNASSIGNED, dtype=np.int64)
    members = np.flatnonzero(labels != UNASSIGNED)
    if members.size == 0:
        return out, 0
    old_ids, dense = np.unique(labels[members], return_inverse=True)
    first = np.full(len(old_ids), len(labels), dtype=np.int64)
    np.minimum.at(first, dense, members)
    rank = np.empty(len(old_ids), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(old_ids))
    out[members] = rank[dense]
    return out, len(old_ids)


def _class_components(
    points: np.ndarray,
    mask: np.ndarray,
    semantic: np.ndarray,
    link_radius: float,
    threads: int | None,
) -> tuple[np.ndarray, int]:
    classes = np.unique(semantic[mask])

    def run(class_id):
        idx = np.flatnonzero(mask & (semantic == class_id))
        n, labels = radius_components(points[idx], link_radius)
        return idx, labels, n

    labels = np.full(len(points), UNASSIGNED, dtype=np.int64)
    offset = 0
    for idx, local, n in ordered_map(run, classes, threads=threads):
        labels[idx] = local + offset
        offset += n
    return canonical_labels(labels)


def _class_of_instances(instance_ids: np.ndarray, semantic: np.ndarray, n: int) -> np.ndarray:
    class_ids = np.zeros(n, dtype=np.int64)
    assigned = instance_ids != UNASSIGNED
    class_ids[instance_ids[assigned]] = semantic[assigned]
    return class_ids


def _validate(points, semantic, mask, link_radius) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not link_radius > 0:
        raise ValidationError(f"link_radius must be > 0, got {link_radius}")
    pts = as_points(points)
    semantic = np.asarray(semantic, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    if not (len(pts) == len(semantic) == len(mask)):
        raise ValidationError("points, semantic labels and mask must have equal length")
    return pts, semantic, mask


def group_hps(
    shifted_points,
    hp_mask,
    semantic_labels,
    link_radius: float,
    *,
    threads: int | None = None,
) -> PreliminaryAssignment:
    pts, semantic, hp_mask = _validate(shifted_points, semantic_labels, hp_mask, link_radius)
    instance_ids, n = _class_components(pts, hp_mask, semantic, link_radius, threads)
    assignment = PreliminaryAssignment(
        instance_ids=instance_ids,
        class_ids=_class_of_instances(instance_ids, semantic, n),
    )
    logger.info("hps_grouped", n_hps=int(hp_mask.sum()), n_instances=n, link_radius=link_radius)
    return assignment


def distance_cluster(
    shifted_points,
    semantic_labels,
    link_radius: float,
    min_points: int = DEFAULT_MIN_POINTS,
    *,
    foreground_mask=None,
    threads: int | None = None,
) -> PreliminaryAssignment:
    if min_points < 1:
        raise ValidationError(f"min_points must be >= 1, got {min_points}")
    if foreground_mask is None:
        foreground_mask = np.ones(len(as_points(shifted_points)), dtype=bool)
    pts, semantic, fg = _validate(shifted_points, semantic_labels, foreground_mask, link_radius)
    labels, n = _class_components(pts, fg, semantic, link_radius, threads)

    sizes = np.bincount(labels[labels != UNASSIGNED], minlength=n)
    small = np.flatnonzero(sizes < min_points)
    ignored = np.isin(labels, small) & fg
    labels[ignored] = UNASSIGNED
    instance_ids, n_kept = canonical_labels(labels)
    assignment = PreliminaryAssignment(
        instance_ids=instance_ids,
        class_ids=_class_of_instances(instance_ids, semantic, n_kept),
        ignored=ignored,
    )
    logger.info(
        "distance_clustered",
        n_points=int(fg.sum()),
        n_instances=n_kept,
        n_dropped=len(small),
        n_ignored=int(ignored.sum()),
    )
    return assignment
