"""
Instance-segmentation metrics.

AP follows the ScanNet protocol as implemented here: per class and per
overlap, predictions are visited by descending score (ties by lower id)
and each one is matched to the still-unmatched GT instance of its class
with the highest IoU >= overlap (ties by lower GT id). The PR curve is
integrated with all-point interpolation (precision envelope). Classes
without GT instances are left out of the means.

Offset diagnostics reuse the regression and direction terms of the offset
branch's training objective as plain metrics.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import structlog

from src.apps.clouds.models import InstanceProposal, LabeledCloud
from src.apps.clouds.schemas import ClassCatalog
from src.apps.clouds.selectors import GroundTruthInstance, foreground_mask, ground_truth_instances
from src.apps.clouds.services import ground_truth_offsets
from src.apps.evaluation.schemas import ClassAP, Diagnostics, EvalReport
from src.apps.scoring.services import iou_matrix
from src.common.exceptions import ValidationError

logger = structlog.get_logger(__name__)

AP_OVERLAPS: tuple[float, ...] = tuple(np.round(np.arange(0.5, 0.951, 0.05), 2).tolist())
AP25_OVERLAP = 0.25


def overlap_key(overlap: float) -> str:
    return f"{overlap:.2f}"


# ═════════════════════════════════════════════════════════════════════════
#  Average precision
# ═════════════════════════════════════════════════════════════════════════


def match_predictions(ious: np.ndarray, overlap: float) -> np.ndarray:
    """
    Greedy matching over rows already in descending-score order.
    Returns a 0/1 true-positive flag per row.
    """
    n_pred, n_gt = ious.shape
    tp = np.zeros(n_pred, dtype=np.int64)
    free = np.ones(n_gt, dtype=bool)
    for row in range(n_pred):
        candidates = np.where(free & (ious[row] >= overlap), ious[row], -1.0)
        if n_gt == 0 or candidates.max() < 0:
            continue
        best = int(np.argmax(candidates))
        free[best] = False
        tp[row] = 1
    return tp


def all_point_ap(tp: np.ndarray, n_gt: int) -> float:
    """Area under the interpolated precision/recall curve."""
    if n_gt == 0:
        raise ValidationError("AP is undefined without GT instances")
    if len(tp) == 0:
        return 0.0
    ctp = np.cumsum(tp)
    cfp = np.cumsum(1 - tp)
    recall = ctp / n_gt
    precision = ctp / (ctp + cfp)
    mrec = np.concatenate([[0.0], recall, [1.0]])
    mpre = np.concatenate([[0.0], precision, [0.0]])
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    steps = np.flatnonzero(mrec[1:] != mrec[:-1])
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def _ranked(predictions: Sequence[InstanceProposal]) -> list[int]:
    scores = np.array([p.score for p in predictions], dtype=np.float64)
    return np.lexsort((np.arange(len(predictions)), -scores)).tolist()


def average_precision(
    predictions: Sequence[InstanceProposal],
    gt_instances: Sequence[GroundTruthInstance],
    *,
    class_names: Sequence[str],
    overlaps: Sequence[float] = AP_OVERLAPS,
    n_points: int | None = None,
) -> EvalReport:
    evaluated = sorted({*map(float, overlaps), 0.5, AP25_OVERLAP})
    gt_classes = sorted({g.class_id for g in gt_instances})
    ranked = _ranked(predictions)

    per_class: list[ClassAP] = []
    by_overlap: dict[str, list[float]] = {overlap_key(o): [] for o in evaluated}
    for class_id in gt_classes:
        gts = [g.point_indices for g in gt_instances if g.class_id == class_id]
        preds = [predictions[i].point_indices for i in ranked if predictions[i].class_id == class_id]
        ious = iou_matrix(preds, gts, n_points)

        ap_at: dict[str, float] = {}
        for overlap in evaluated:
            tp = match_predictions(ious, overlap)
            ap_at[overlap_key(overlap)] = all_point_ap(tp, len(gts))
            by_overlap[overlap_key(overlap)].append(ap_at[overlap_key(overlap)])

        tp50 = int(match_predictions(ious, 0.5).sum())
        per_class.append(
            ClassAP(
                class_id=class_id,
                name=class_names[class_id],
                ap=float(np.mean([ap_at[overlap_key(o)] for o in overlaps])),
                ap50=ap_at[overlap_key(0.5)],
                ap25=ap_at[overlap_key(AP25_OVERLAP)],
                precision50=tp50 / len(preds) if preds else 0.0,
                recall50=tp50 / len(gts),
                n_gt=len(gts),
                n_pred=len(preds),
            )
        )

    def mean_of(attr: str) -> float | None:
        return float(np.mean([getattr(c, attr) for c in per_class])) if per_class else None

    report = EvalReport(
        map=mean_of("ap"),
        ap50=mean_of("ap50"),
        ap25=mean_of("ap25"),
        mprec50=mean_of("precision50"),
        mrec50=mean_of("recall50"),
        ap_by_overlap={k: float(np.mean(v)) for k, v in by_overlap.items() if v},
        per_class=per_class,
        n_gt=len(gt_instances),
        n_pred=len(predictions),
    )
    logger.info("ap_evaluated", map=report.map, ap50=report.ap50, ap25=report.ap25)
    return report


# ═════════════════════════════════════════════════════════════════════════
#  Diagnostics
# ═════════════════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class DirectionMetric:
    value: float
    # points left out because a predicted or GT offset is the zero vector
    excluded: int


def _aligned(offsets, gt_offsets, mask) -> tuple[np.ndarray, np.ndarray]:
    offsets = np.asarray(offsets, dtype=np.float64).reshape(-1, 3)
    gt_offsets = np.asarray(gt_offsets, dtype=np.float64).reshape(-1, 3)
    mask = np.asarray(mask, dtype=bool)
    if not (len(offsets) == len(gt_offsets) == len(mask)):
        raise ValidationError("offsets, gt offsets and mask must be aligned")
    if not mask.any():
        raise ValidationError("empty foreground")
    return offsets[mask], gt_offsets[mask]


def offset_distance_metric(offsets, gt_offsets, foreground_mask) -> float:
    """Mean L2 norm of the offset error over foreground points."""
    pred, gt = _aligned(offsets, gt_offsets, foreground_mask)
    return float(np.linalg.norm(pred - gt, axis=1).mean())


def offset_direction_metric(offsets, gt_offsets, foreground_mask) -> DirectionMetric:
    """Negative mean cosine between predicted and GT offsets, in [-1, 1]."""
    pred, gt = _aligned(offsets, gt_offsets, foreground_mask)
    pred_norm = np.linalg.norm(pred, axis=1)
    gt_norm = np.linalg.norm(gt, axis=1)
    valid = (pred_norm > 0) & (gt_norm > 0)
    excluded = int((~valid).sum())
    if not valid.any():
        raise ValidationError("no point with both offsets non-zero")
    cosine = (pred[valid] * gt[valid]).sum(axis=1) / (pred_norm[valid] * gt_norm[valid])
    return DirectionMetric(value=float(-cosine.mean()), excluded=excluded)


def dice_metric(pred_mask, gt_mask) -> float:
    pred = np.unique(np.asarray(pred_mask, dtype=np.int64))
    gt = np.unique(np.asarray(gt_mask, dtype=np.int64))
    if gt.size == 0:
        raise ValidationError("empty gt")
    inter = np.intersect1d(pred, gt, assume_unique=True).size
    return 2.0 * inter / (pred.size + gt.size)


def mean_dice(
    predictions: Sequence[InstanceProposal],
    gt_instances: Sequence[GroundTruthInstance],
    n_points: int | None = None,
) -> float | None:
    """Best dice per GT instance (0 when nothing overlaps), averaged."""
    if not gt_instances:
        return None
    if not predictions:
        return 0.0
    ious = iou_matrix(
        [g.point_indices for g in gt_instances], [p.point_indices for p in predictions], n_points
    )
    best = ious.max(axis=1)
    return float(np.mean(2.0 * best / (1.0 + best)))


def foreground_coverage(predictions: Sequence[InstanceProposal], fg_mask: np.ndarray) -> float | None:
    """Fraction of foreground points that belong to at least one prediction."""
    fg_mask = np.asarray(fg_mask, dtype=bool)
    if not fg_mask.any():
        return None
    covered = np.zeros(len(fg_mask), dtype=bool)
    for p in predictions:
        covered[p.point_indices] = True
    return float((covered & fg_mask).sum() / fg_mask.sum())


def evaluate_scene(
    cloud: LabeledCloud,
    predictions: Sequence[InstanceProposal],
    catalog: ClassCatalog,
    *,
    overlaps: Sequence[float] = AP_OVERLAPS,
) -> EvalReport:
    """AP report plus offset, dice and coverage diagnostics for one scene."""
    gt_instances = ground_truth_instances(cloud)
    report = average_precision(
        predictions,
        gt_instances,
        class_names=catalog.names,
        overlaps=overlaps,
        n_points=cloud.n_points,
    )

    fg = foreground_mask(cloud, catalog)
    offset_distance = offset_direction = None
    excluded = 0
    gt_fg = cloud.gt_instance >= 0
    if cloud.offsets is not None and gt_fg.any():
        gt_offsets = ground_truth_offsets(cloud)
        offset_distance = offset_distance_metric(cloud.offsets, gt_offsets, gt_fg)
        try:
            direction = offset_direction_metric(cloud.offsets, gt_offsets, gt_fg)
            offset_direction, excluded = direction.value, direction.excluded
        except ValidationError:
            excluded = int(gt_fg.sum())

    diagnostics = Diagnostics(
        offset_distance=offset_distance,
        offset_direction=offset_direction,
        direction_excluded=excluded,
        mean_dice=mean_dice(predictions, gt_instances, cloud.n_points),
        coverage=foreground_coverage(predictions, fg),
    )
    return report.model_copy(update={"diagnostics": diagnostics})
