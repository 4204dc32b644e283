"""
Read-only lookups derived from a cloud (masks, ground-truth instance sets,
per-class statistics).
"""

from dataclasses import dataclass

import numpy as np

from src.apps.clouds.models import BACKGROUND_INSTANCE, LabeledCloud
from src.apps.clouds.schemas import ClassCatalog
from src.common.exceptions import ValidationError


@dataclass(frozen=True, eq=False)
class GroundTruthInstance:
    instance_id: int
    class_id: int
    point_indices: np.ndarray


def foreground_mask(cloud: LabeledCloud, catalog: ClassCatalog) -> np.ndarray:
    """Points whose *predicted* class is a foreground class."""
    if cloud.n_points and cloud.semantic.max() >= catalog.n_classes:
        raise ValidationError(
            f"semantic id {int(cloud.semantic.max())} outside catalog of {catalog.n_classes} classes"
        )
    return ~catalog.is_background(cloud.semantic)


def ground_truth_instances(cloud: LabeledCloud) -> list[GroundTruthInstance]:
    """GT instances in ascending id order; class = majority gt_semantic of members."""
    if not cloud.has_ground_truth:
        raise ValidationError("cloud carries no ground truth")
    fg = np.flatnonzero(cloud.gt_instance != BACKGROUND_INSTANCE)
    if fg.size == 0:
        return []
    order = fg[np.argsort(cloud.gt_instance[fg], kind="stable")]
    ids, starts = np.unique(cloud.gt_instance[order], return_index=True)
    out = []
    for gid, members in zip(ids, np.split(order, starts[1:]), strict=True):
        classes = np.bincount(cloud.gt_semantic[members])
        out.append(
            GroundTruthInstance(
                instance_id=int(gid),
                class_id=int(np.argmax(classes)),
                point_indices=np.sort(members),
            )
        )
    return out


def bounding_sphere_diameter(points: np.ndarray) -> float:
    """Diameter of the centroid-centred sphere enclosing all points."""
    center = points.mean(axis=0)
    return 2.0 * float(np.sqrt(((points - center) ** 2).sum(axis=1).max()))


def class_statistics(cloud: LabeledCloud, n_classes: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Per-class mean bounding-sphere diameter and mean instance point count,
    from ground truth. Classes without instances get NaN.
    """
    sizes: list[list[float]] = [[] for _ in range(n_classes)]
    counts: list[list[int]] = [[] for _ in range(n_classes)]
    for inst in ground_truth_instances(cloud):
        sizes[inst.class_id].append(bounding_sphere_diameter(cloud.points[inst.point_indices]))
        counts[inst.class_id].append(len(inst.point_indices))
    mean_size = np.array([np.mean(s) if s else np.nan for s in sizes])
    mean_count = np.array([np.mean(c) if c else np.nan for c in counts])
    return mean_size, mean_count
