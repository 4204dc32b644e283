"""
Centroid and offset arithmetic.

All functions are pure: the same input gives bit-identical output.
"""

import numpy as np
import structlog

from src.apps.clouds.models import BACKGROUND_INSTANCE, LabeledCloud, Point3, as_points
from src.common.exceptions import ValidationError

logger = structlog.get_logger(__name__)


def centroid(points) -> Point3:
    """Component-wise arithmetic mean of a non-empty point list."""
    pts = as_points(points)
    if len(pts) == 0:
        raise ValidationError("empty instance")
    return pts.mean(axis=0)


def group_centroids(points: np.ndarray, labels: np.ndarray, n_groups: int) -> np.ndarray:
    """
    Centroid of every group ``0..n_groups-1``; rows of ``labels`` equal to -1
    are skipped. Empty groups get NaN rows.
    """
    pts = as_points(points)
    labels = np.asarray(labels, dtype=np.int64)
    keep = labels >= 0
    sums = np.zeros((n_groups, 3), dtype=np.float64)
    np.add.at(sums, labels[keep], pts[keep])
    counts = np.bincount(labels[keep], minlength=n_groups).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        return sums / counts[:, None]


def apply_offsets(cloud: LabeledCloud) -> np.ndarray:
    """Shifted coordinates ``points + offsets`` for every point of the cloud."""
    if cloud.offsets is None:
        raise ValidationError("cloud carries no offsets")
    return cloud.points + cloud.offsets


def ground_truth_offsets(cloud: LabeledCloud) -> np.ndarray:
    """
    Target offsets ``c_hat - p`` toward each point's ground-truth instance
    centroid. Background points (sentinel instance id) get the zero vector.
    """
    if cloud.gt_instance is None:
        raise ValidationError("ground_truth_offsets needs gt_instance labels")

    offsets = np.zeros_like(cloud.points)
    fg = cloud.gt_instance != BACKGROUND_INSTANCE
    if not fg.any():
        return offsets

    ids, dense = np.unique(cloud.gt_instance[fg], return_inverse=True)
    centers = group_centroids(cloud.points[fg], dense, len(ids))
    offsets[fg] = centers[dense] - cloud.points[fg]
    logger.debug("gt_offsets_computed", n_instances=len(ids), n_foreground=int(fg.sum()))
    return offsets
