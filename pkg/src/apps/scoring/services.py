"""
Proposal scoring and greedy non-maximum suppression.

Scorers:
  - heuristic : (size / class mean count) x (mean shifted-space density / theta_d),
                each factor clamped to [0, 1]
  - oracle    : best IoU against the ground-truth instances (upper bound)
  - constant  : 1.0
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import structlog
from scipy.sparse import csr_matrix

from src.apps.clouds.models import InstanceProposal, LabeledCloud
from src.apps.clouds.selectors import ground_truth_instances
from src.common.exceptions import ValidationError
from src.common.types import ScorerName

logger = structlog.get_logger(__name__)

DEFAULT_NMS_IOU = 0.3


@dataclass(frozen=True, eq=False)
class Scorer:
    name: ScorerName
    theta_d: int = 30
    # shifted-space density per cloud point (heuristic scorer)
    densities: np.ndarray | None = None
    # mean point count per class, NaN where unknown (heuristic scorer)
    class_mean_count: Sequence[float] | None = None


# ── Set overlap ─────────────────────────────────────────────────────────


def pairwise_iou(a: InstanceProposal, b: InstanceProposal) -> float:
    inter = np.intersect1d(a.point_indices, b.point_indices, assume_unique=True).size
    return inter / (a.size + b.size - inter)


def incidence(point_sets: Sequence[np.ndarray], n_points: int) -> csr_matrix:
    """Sparse 0/1 matrix, one row per point set."""
    lengths = np.array([len(s) for s in point_sets], dtype=np.int64)
    rows = np.repeat(np.arange(len(point_sets)), lengths)
    cols = np.concatenate(point_sets) if len(point_sets) else np.zeros(0, dtype=np.int64)
    data = np.ones(len(cols), dtype=np.int64)
    return csr_matrix((data, (rows, cols)), shape=(len(point_sets), n_points))


def iou_matrix(
    sets_a: Sequence[np.ndarray], sets_b: Sequence[np.ndarray], n_points: int | None = None
) -> np.ndarray:
    """Dense IoU between every set of ``sets_a`` and every set of ``sets_b``."""
    if not len(sets_a) or not len(sets_b):
        return np.zeros((len(sets_a), len(sets_b)))
    if n_points is None:
        n_points = 1 + max(int(s.max()) for s in [*sets_a, *sets_b] if len(s))
    a = incidence(sets_a, n_points)
    b = incidence(sets_b, n_points)
    inter = (a @ b.T).toarray().astype(np.float64)
    size_a = np.array([len(s) for s in sets_a], dtype=np.float64)
    size_b = np.array([len(s) for s in sets_b], dtype=np.float64)
    union = size_a[:, None] + size_b[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(union > 0, inter / union, 0.0)


# ── Scoring ─────────────────────────────────────────────────────────────


def _heuristic_scores(proposals: Sequence[InstanceProposal], scorer: Scorer) -> np.ndarray:
    if scorer.densities is None:
        raise ValidationError("heuristic scorer needs shifted-space densities")
    sizes = np.array([p.size for p in proposals], dtype=np.float64)
    classes = np.array([p.class_id for p in proposals], dtype=np.int64)

    mean_count = np.full(len(proposals), np.nan)
    if scorer.class_mean_count is not None:
        table = np.asarray(scorer.class_mean_count, dtype=np.float64)
        mean_count = table[classes]
    for c in np.unique(classes):
        unknown = (classes == c) & ~(mean_count > 0)
        mean_count[unknown] = sizes[classes == c].mean()
    size_factor = np.clip(sizes / mean_count, 0.0, 1.0)

    if scorer.theta_d > 0:
        mean_density = np.array([scorer.densities[p.point_indices].mean() for p in proposals])
        density_factor = np.clip(mean_density / scorer.theta_d, 0.0, 1.0)
    else:
        density_factor = np.ones(len(proposals))
    return size_factor * density_factor


def _oracle_scores(proposals: Sequence[InstanceProposal], cloud: LabeledCloud) -> np.ndarray:
    if not cloud.has_ground_truth:
        raise ValidationError("oracle scorer needs ground truth")
    gt_sets = [g.point_indices for g in ground_truth_instances(cloud)]
    if not gt_sets:
        return np.zeros(len(proposals))
    ious = iou_matrix([p.point_indices for p in proposals], gt_sets, cloud.n_points)
    return ious.max(axis=1)


def score_proposals(
    proposals: Sequence[InstanceProposal], cloud: LabeledCloud, scorer: Scorer
) -> np.ndarray:
    if not proposals:
        return np.zeros(0)
    match scorer.name:
        case ScorerName.CONSTANT:
            scores = np.ones(len(proposals))
        case ScorerName.ORACLE:
            scores = _oracle_scores(proposals, cloud)
        case ScorerName.HEURISTIC:
            scores = _heuristic_scores(proposals, scorer)
        case _:
            raise ValidationError(f"unknown scorer {scorer.name!r}")
    return np.clip(scores, 0.0, 1.0)


# ── Filtering ───────────────────────────────────────────────────────────


def filter_min_size(proposals: Sequence[InstanceProposal], min_points: int) -> list[int]:
    return [i for i, p in enumerate(proposals) if p.size >= min_points]


def nms(
    proposals: Sequence[InstanceProposal],
    scores: Sequence[float],
    iou_threshold: float,
) -> list[int]:
    """
    Greedy NMS: keep the best remaining proposal (ties by lower id), drop
    every remaining proposal with IoU > threshold against it, repeat.
    Returns kept ids in selection order.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise ValidationError(f"iou_threshold must lie in [0, 1], got {iou_threshold}")
    scores = np.asarray(scores, dtype=np.float64)
    if len(scores) != len(proposals):
        raise ValidationError("scores must be aligned with proposals")
    if not proposals:
        return []

    ious = iou_matrix([p.point_indices for p in proposals], [p.point_indices for p in proposals])
    order = np.lexsort((np.arange(len(proposals)), -scores))
    suppressed = np.zeros(len(proposals), dtype=bool)
    kept: list[int] = []
    for i in order:
        if suppressed[i]:
            continue
        kept.append(int(i))
        suppressed |= ious[i] > iou_threshold
    logger.debug("nms_done", n_in=len(proposals), n_kept=len(kept), threshold=iou_threshold)
    return kept
