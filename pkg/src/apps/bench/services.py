"""
Seeded benchmark harness: binary vs distance clustering over noise levels,
parameter sweeps (r_d × theta_d, K) and stage ablations.

Scenes are generated once per seed and reused by every variant. Jobs run
concurrently; rows come back in a fixed (variant, noise, seed) order so the
report only differs between runs in its timing fields.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import structlog

from src.apps.bench.schemas import (
    AblationReport,
    BenchReport,
    BenchRow,
    BenchSuite,
    SummaryRow,
    SweepPoint,
)
from src.apps.clouds.models import LabeledCloud
from src.apps.clouds.schemas import ClassCatalog
from src.apps.evaluation.services import evaluate_scene
from src.apps.pipeline.schemas import PipelineConfig
from src.apps.pipeline.services import segment
from src.apps.synth.services import apply_noise, generate_scene, synthetic_catalog
from src.common.parallel import ordered_map
from src.common.types import AblationStage, ClusteringMode, RefinerName

logger = structlog.get_logger(__name__)


@dataclass(frozen=True, eq=False)
class BenchScene:
    seed: int
    noise: str
    cloud: LabeledCloud
    catalog: ClassCatalog


def build_scenes(suite: BenchSuite, *, threads: int | None = None) -> list[BenchScene]:
    """Every (noise level, seed) scene of the suite, noise-major."""

    def make(seed: int):
        config = suite.scene.model_copy(update={"seed": seed})
        clean = generate_scene(config)
        return seed, clean, synthetic_catalog(config, clean)

    generated = ordered_map(make, suite.seeds, threads=threads)
    return [
        BenchScene(
            seed=seed,
            noise=level.name,
            cloud=apply_noise(clean, level.noise.model_copy(update={"seed": seed}), catalog),
            catalog=catalog,
        )
        for level in suite.noise_levels
        for seed, clean, catalog in generated
    ]


def evaluate_variant(scene: BenchScene, variant: str, config: PipelineConfig) -> BenchRow:
    result = segment(scene.cloud, scene.catalog, config, scene_id=f"{scene.noise}/{scene.seed}")
    report = evaluate_scene(scene.cloud, result.proposals, scene.catalog)
    return BenchRow(
        variant=variant,
        noise=scene.noise,
        seed=scene.seed,
        map=report.map,
        ap50=report.ap50,
        ap25=report.ap25,
        n_gt=report.n_gt,
        n_proposals=len(result.proposals),
        coverage=report.diagnostics.coverage if report.diagnostics else None,
        coverage_before_filter=result.metadata.coverage_before_filter,
        timings=result.metadata.timings,
    )


def _run(
    jobs: Sequence[tuple[BenchScene, str, PipelineConfig]], threads: int | None
) -> list[BenchRow]:
    return ordered_map(lambda job: evaluate_variant(*job), jobs, threads=threads)


def _mean(values) -> float | None:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def summarize(rows: Sequence[BenchRow]) -> list[SummaryRow]:
    """Suite means per (variant, noise), in order of first appearance."""
    groups: dict[tuple[str, str], list[BenchRow]] = {}
    for row in rows:
        groups.setdefault((row.variant, row.noise), []).append(row)
    return [
        SummaryRow(
            variant=variant,
            noise=noise,
            n_scenes=len(group),
            mean_map=_mean(r.map for r in group),
            mean_ap50=_mean(r.ap50 for r in group),
            mean_ap25=_mean(r.ap25 for r in group),
            mean_coverage=_mean(r.coverage for r in group),
        )
        for (variant, noise), group in groups.items()
    ]


# ── Sweeps ──────────────────────────────────────────────────────────────


def _sweep_point(config: PipelineConfig, scenes, threads) -> SweepPoint:
    rows = _run([(scene, "sweep", config) for scene in scenes], threads)
    return SweepPoint(
        r_d=config.r_d,
        theta_d=config.theta_d,
        k=config.k,
        mean_map=_mean(r.map for r in rows),
        mean_ap50=_mean(r.ap50 for r in rows),
    )


def run_sweeps(
    suite: BenchSuite, scenes: Sequence[BenchScene], *, threads: int | None = None
) -> dict[str, list[SweepPoint]]:
    """
    r_d × theta_d grid and K = 1..10 on the sweep noise level, binary mode.
    K only acts through the local-scene refiner, so the K sweep runs with
    ``adjacent_merge``.
    """
    level = suite.noise_level(suite.sweep_noise).name
    picked = [s for s in scenes if s.noise == level]
    base = suite.pipeline.with_overrides(mode=ClusteringMode.BINARY, threads=1)

    grid = [
        _sweep_point(base.with_overrides(r_d=r_d, theta_d=theta_d), picked, threads)
        for r_d in suite.sweep_r_d
        for theta_d in suite.sweep_theta_d
    ]
    k_curve = [
        _sweep_point(
            base.with_overrides(k=k, refiner=RefinerName.ADJACENT_MERGE, local_scenes=True),
            picked,
            threads,
        )
        for k in suite.sweep_k
    ]
    logger.info("sweeps_done", noise=level, grid_points=len(grid), k_points=len(k_curve))
    return {"r_d_theta_d": grid, "k": k_curve}


# ── Suite / ablation ────────────────────────────────────────────────────


def run_suite(suite: BenchSuite, *, threads: int | None = None) -> BenchReport:
    """One row per (mode, noise level, seed), plus sweeps when enabled."""
    threads = threads or suite.threads or None
    scenes = build_scenes(suite, threads=threads)
    jobs = [
        (scene, str(mode), suite.pipeline.with_overrides(mode=mode, threads=1))
        for mode in suite.modes
        for scene in scenes
    ]
    rows = _run(jobs, threads)
    sweeps = run_sweeps(suite, scenes, threads=threads) if suite.sweeps else {}
    report = BenchReport(
        suite=suite.model_dump(mode="json"),
        rows=rows,
        sweeps=sweeps,
        summary=summarize(rows),
    )
    logger.info("bench_done", suite=suite.name, n_rows=len(rows), n_scenes=len(scenes))
    return report


def ablation_variants(stage: AblationStage, base: PipelineConfig) -> dict[str, PipelineConfig]:
    """Off / on configurations of one stage, off first."""
    match stage:
        case AblationStage.VOTING:
            binary = base.with_overrides(mode=ClusteringMode.BINARY)
            return {
                "voting_off": binary.with_overrides(voting=False),
                "voting_on": binary.with_overrides(voting=True),
            }
        case AblationStage.LOCAL_SCENES:
            refiner = base.refiner
            if refiner == RefinerName.IDENTITY:
                refiner = RefinerName.ADJACENT_MERGE
            return {
                "local_scenes_off": base.with_overrides(local_scenes=False),
                "local_scenes_on": base.with_overrides(local_scenes=True, refiner=refiner),
            }
        case AblationStage.BINARY:
            return {
                "distance": base.with_overrides(mode=ClusteringMode.DISTANCE),
                "binary": base.with_overrides(mode=ClusteringMode.BINARY),
            }
    raise ValueError(f"unknown ablation stage {stage!r}")


def run_ablation(
    suite: BenchSuite, stage: AblationStage, *, threads: int | None = None
) -> AblationReport:
    threads = threads or suite.threads or None
    scenes = build_scenes(suite, threads=threads)
    variants = ablation_variants(stage, suite.pipeline.with_overrides(threads=1))
    jobs = [(scene, name, config) for name, config in variants.items() for scene in scenes]
    rows = _run(jobs, threads)
    logger.info("ablation_done", stage=str(stage), n_rows=len(rows))
    return AblationReport(
        stage=stage,
        suite=suite.model_dump(mode="json"),
        rows=rows,
        summary=summarize(rows),
    )
