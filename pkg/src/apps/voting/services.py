"""
Neighbor voting for low-density points (LPs).

Runs in ORIGINAL coordinates. An LP of predicted class ``c`` looks at the
grouped points of class ``c`` inside the class mean size ``r_m(c)`` and
joins the instance holding most of them (ties: instance of the nearest
voter, then lowest instance id). An LP without any such voter joins the
instance of its globally nearest voter, whatever its class.

By default only HPs vote, so every LP is decided independently in a single
pass. ``multi_round=True`` lets LPs assigned in one round vote in the next;
LPs without same-class voters wait for later rounds and fall back to the
nearest voter only when a round makes no progress.
"""

from dataclasses import dataclass

import numpy as np
import structlog

from src.apps.clouds.models import as_points
from src.apps.clouds.schemas import ClassCatalog
from src.apps.clustering.services import UNASSIGNED, PreliminaryAssignment
from src.apps.spatial.services import SpatialIndex
from src.common.exceptions import ValidationError
from src.common.parallel import ordered_map

logger = structlog.get_logger(__name__)


@dataclass(frozen=True, eq=False)
class FullAssignment:
    instance_ids: np.ndarray
    class_ids: np.ndarray
    # LPs left without an instance (only when no HP exists at all)
    unassignable: np.ndarray
    n_voted: int = 0
    n_fallback: int = 0
    rounds: int = 0

    @property
    def n_instances(self) -> int:
        return len(self.class_ids)

    @property
    def is_complete(self) -> bool:
        return self.unassignable.size == 0


def _vote_class(
    points: np.ndarray,
    ids: np.ndarray,
    voter_idx: np.ndarray,
    lp_idx: np.ndarray,
    radius: float,
) -> np.ndarray:
    """Winner instance per LP of one class, UNASSIGNED when no voter is in range."""
    winners = np.full(len(lp_idx), UNASSIGNED, dtype=np.int64)
    if voter_idx.size == 0 or lp_idx.size == 0:
        return winners
    index = SpatialIndex(points[voter_idx])
    rows, cols, d2 = index.cross_pairs(points[lp_idx], radius)
    if rows.size == 0:
        return winners

    inst = ids[voter_idx[cols]]
    stride = int(inst.max()) + 1
    key = rows * stride + inst
    order = np.argsort(key, kind="stable")
    key, d2 = key[order], d2[order]
    groups, starts, counts = np.unique(key, return_index=True, return_counts=True)
    nearest = np.minimum.reduceat(d2, starts)
    g_row, g_inst = groups // stride, groups % stride

    # per LP: most votes, then nearest voter, then lowest instance id
    best = np.lexsort((g_inst, nearest, -counts, g_row))
    first = np.unique(g_row[best], return_index=True)[1]
    chosen = best[first]
    winners[g_row[chosen]] = g_inst[chosen]
    return winners


def _vote_round(
    points: np.ndarray,
    ids: np.ndarray,
    voters: np.ndarray,
    pending: np.ndarray,
    semantic: np.ndarray,
    catalog: ClassCatalog,
    threads: int | None,
) -> np.ndarray:
    winners = np.full(len(pending), UNASSIGNED, dtype=np.int64)
    classes = np.unique(semantic[pending])

    def run(class_id):
        if catalog.background[class_id]:
            raise ValidationError(f"LP of background class '{catalog.name_of(class_id)}'")
        rows = np.flatnonzero(semantic[pending] == class_id)
        voter_idx = np.flatnonzero(voters & (semantic == class_id))
        return rows, _vote_class(points, ids, voter_idx, pending[rows], catalog.radius_for(class_id))

    for rows, won in ordered_map(run, classes, threads=threads):
        winners[rows] = won
    return winners


def assign_lps(
    original_points,
    preliminary: PreliminaryAssignment,
    lp_mask,
    semantic_labels,
    catalog: ClassCatalog,
    *,
    multi_round: bool = False,
    threads: int | None = None,
) -> FullAssignment:
    points = as_points(original_points)
    semantic = np.asarray(semantic_labels, dtype=np.int64)
    lp_mask = np.asarray(lp_mask, dtype=bool)
    ids = preliminary.instance_ids.copy()
    if not (len(points) == len(semantic) == len(lp_mask) == len(ids)):
        raise ValidationError("points, semantic labels, lp mask and assignment must have equal length")
    if (lp_mask & (ids != UNASSIGNED)).any():
        raise ValidationError("LPs must not carry a preliminary instance id")
    if semantic.size and semantic.max() >= catalog.n_classes:
        raise ValidationError("semantic id outside the class catalog")

    pending = np.flatnonzero(lp_mask)
    voters = ids != UNASSIGNED
    if not voters.any():
        if pending.size:
            logger.warning("lps_unassignable", n_lps=int(pending.size))
        return FullAssignment(
            instance_ids=ids,
            class_ids=preliminary.class_ids.copy(),
            unassignable=pending,
        )

    n_voted = 0
    rounds = 0
    while pending.size:
        rounds += 1
        winners = _vote_round(points, ids, voters, pending, semantic, catalog, threads)
        won = winners != UNASSIGNED
        ids[pending[won]] = winners[won]
        n_voted += int(won.sum())
        if not multi_round or not won.any():
            break
        voters[pending[won]] = True
        pending = pending[~won]
    else:
        won = np.zeros(0, dtype=bool)

    leftover = pending[~won] if pending.size else pending
    if leftover.size:
        voter_idx = np.flatnonzero(voters)
        nearest, _ = SpatialIndex(points[voter_idx]).nearest(points[leftover])
        ids[leftover] = ids[voter_idx[nearest]]

    logger.info(
        "lps_voted",
        n_lps=int(lp_mask.sum()),
        n_voted=n_voted,
        n_fallback=int(leftover.size),
        rounds=rounds,
        multi_round=multi_round,
    )
    return FullAssignment(
        instance_ids=ids,
        class_ids=preliminary.class_ids.copy(),
        unassignable=np.zeros(0, dtype=np.int64),
        n_voted=n_voted,
        n_fallback=int(leftover.size),
        rounds=rounds,
    )
