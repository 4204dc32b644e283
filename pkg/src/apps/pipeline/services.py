"""
End-to-end segmentation of one labeled cloud.

    background removal → offset shift → binarize → group HPs → vote LPs
    → local scenes (+ refiner hook) → min-size filter → score → NMS

``mode=distance`` replaces binarize / group / vote by the distance
clustering baseline. Every stage is deterministic; only the timings in the
run metadata change between identical runs.
"""

import time
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np
import structlog

from src.apps.binarize.services import binarize, point_densities
from src.apps.clouds.models import InstanceProposal, LabeledCloud
from src.apps.clouds.schemas import ClassCatalog
from src.apps.clouds.selectors import foreground_mask
from src.apps.clouds.services import apply_offsets, group_centroids
from src.apps.clustering.services import UNASSIGNED, distance_cluster, group_hps
from src.apps.local_scenes.services import build_local_scenes, make_refiner, refine
from src.apps.pipeline.schemas import PipelineConfig, RunMetadata
from src.apps.scoring.services import Scorer, filter_min_size, nms, score_proposals
from src.apps.voting.services import assign_lps
from src.common.exceptions import ValidationError
from src.common.parallel import ordered_map
from src.common.types import ClusteringMode, ScorerName, Stage

logger = structlog.get_logger(__name__)


@dataclass(frozen=True, eq=False)
class SegmentationResult:
    # final proposals in NMS selection order (descending score)
    proposals: list[InstanceProposal]
    metadata: RunMetadata


@contextmanager
def _timed(timings: dict[str, float], stage: Stage) -> Iterator[None]:
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[str(stage)] = timings.get(str(stage), 0.0) + time.perf_counter() - start


def _proposals(
    points: np.ndarray, fg_idx: np.ndarray, ids: np.ndarray, class_ids: np.ndarray
) -> list[InstanceProposal]:
    """One proposal per instance id, point indices mapped back to the full cloud."""
    n = len(class_ids)
    assigned = ids != UNASSIGNED
    order = np.argsort(ids[assigned], kind="stable")
    members = fg_idx[assigned][order]
    bounds = np.searchsorted(ids[assigned][order], np.arange(n + 1))
    centers = group_centroids(points[fg_idx], ids, n)
    return [
        InstanceProposal(
            point_indices=members[bounds[i] : bounds[i + 1]],
            class_id=int(class_ids[i]),
            centroid=centers[i],
        )
        for i in range(n)
        if bounds[i + 1] > bounds[i]
    ]


def _refined(
    cloud: LabeledCloud, proposals: list[InstanceProposal], config: PipelineConfig, threads
) -> list[InstanceProposal]:
    scenes = build_local_scenes(proposals, config.k, semantic_scores=cloud.semantic_scores)
    refiner = make_refiner(
        config.refiner,
        points=cloud.points,
        class_ids=[p.class_id for p in proposals],
        gap=config.merge_gap,
        min_weight=config.merge_min_weight,
    )

    def run(scene):
        refined = refine(scene, refiner)
        current = proposals[scene.primary_id]
        if np.array_equal(refined, current.point_indices):
            return current
        return InstanceProposal(
            point_indices=refined,
            class_id=current.class_id,
            centroid=cloud.points[refined].mean(axis=0),
        )

    return ordered_map(run, scenes, threads=threads)


def segment(
    cloud: LabeledCloud,
    catalog: ClassCatalog,
    config: PipelineConfig | None = None,
    *,
    scene_id: str | None = None,
) -> SegmentationResult:
    config = config or PipelineConfig()
    threads = config.threads or None
    if cloud.offsets is None:
        raise ValidationError("segment needs predicted offsets")

    timings: dict[str, float] = {}
    with structlog.contextvars.bound_contextvars(scene=scene_id or "-"):
        with _timed(timings, Stage.BASELINE):
            fg_idx = np.flatnonzero(foreground_mask(cloud, catalog))
            shifted = apply_offsets(cloud)[fg_idx]
            semantic = cloud.semantic[fg_idx]

        if fg_idx.size == 0:
            logger.info("segment_empty_foreground", n_points=cloud.n_points)
            return SegmentationResult(
                proposals=[],
                metadata=RunMetadata(n_points=cloud.n_points, n_foreground=0, timings=timings),
            )

        counts: dict[str, int] = {}
        densities = None
        if config.mode == ClusteringMode.BINARY or config.scorer == ScorerName.HEURISTIC:
            with _timed(timings, Stage.BINARIZE):
                densities = point_densities(shifted, config.r_d)

        if config.mode == ClusteringMode.BINARY:
            with _timed(timings, Stage.BINARIZE):
                label = binarize(densities, config.theta_d)
            counts.update(n_hp=label.n_hp, n_lp=label.n_lp)
            with _timed(timings, Stage.GROUP_HPS):
                preliminary = group_hps(
                    shifted, label.is_hp, semantic, config.link_radius, threads=threads
                )
            ids, class_ids = preliminary.instance_ids, preliminary.class_ids
            if config.voting:
                with _timed(timings, Stage.VOTE_LPS):
                    full = assign_lps(
                        cloud.points[fg_idx],
                        preliminary,
                        label.is_lp,
                        semantic,
                        catalog,
                        multi_round=config.multi_round_voting,
                        threads=threads,
                    )
                ids, class_ids = full.instance_ids, full.class_ids
                counts.update(
                    n_unassignable=int(full.unassignable.size),
                    voting_rounds=full.rounds,
                    n_fallback=full.n_fallback,
                )
        else:
            with _timed(timings, Stage.GROUP_HPS):
                preliminary = distance_cluster(
                    shifted,
                    semantic,
                    config.link_radius,
                    config.distance_min_points,
                    threads=threads,
                )
            ids, class_ids = preliminary.instance_ids, preliminary.class_ids
            counts["n_ignored"] = int(preliminary.ignored.sum())

        with _timed(timings, Stage.POST_PROCESS):
            proposals = _proposals(cloud.points, fg_idx, ids, class_ids)
        coverage = float((ids != UNASSIGNED).sum() / fg_idx.size)

        if config.local_scenes and proposals:
            with _timed(timings, Stage.LOCAL_SCENE):
                proposals = _refined(cloud, proposals, config, threads)

        with _timed(timings, Stage.POST_PROCESS):
            kept = [proposals[i] for i in filter_min_size(proposals, config.min_proposal_points)]
            full_density = None
            if densities is not None:
                full_density = np.zeros(cloud.n_points, dtype=np.int64)
                full_density[fg_idx] = densities.counts
            scorer = Scorer(
                name=config.scorer,
                theta_d=config.theta_d,
                densities=full_density,
                class_mean_count=catalog.mean_count,
            )
            scores = score_proposals(kept, cloud, scorer)
            selected = nms(kept, scores, config.nms_iou)
            final = [kept[i].with_score(float(scores[i])) for i in selected]

        metadata = RunMetadata(
            n_points=cloud.n_points,
            n_foreground=int(fg_idx.size),
            n_preliminary=len(class_ids),
            n_after_filter=len(kept),
            n_proposals=len(final),
            coverage_before_filter=coverage,
            timings=timings,
            **counts,
        )
        logger.info(
            "scene_segmented",
            mode=str(config.mode),
            n_proposals=len(final),
            n_preliminary=len(class_ids),
            **counts,
        )
    return SegmentationResult(proposals=final, metadata=metadata)


def segment_many(
    clouds: Sequence[LabeledCloud],
    catalogs: Sequence[ClassCatalog],
    config: PipelineConfig,
    *,
    scene_ids: Sequence[str] | None = None,
    threads: int | None = None,
) -> list[SegmentationResult]:
    """Independent scenes in parallel; results in input order."""
    scene_ids = scene_ids or [str(i) for i in range(len(clouds))]
    jobs = list(zip(clouds, catalogs, scene_ids, strict=True))
    return ordered_map(
        lambda job: segment(job[0], job[1], config, scene_id=job[2]), jobs, threads=threads
    )
