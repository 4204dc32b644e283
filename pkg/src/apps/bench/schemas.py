"""
Benchmark suite definition and report documents.
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.apps.pipeline.schemas import PipelineConfig
from src.apps.synth.schemas import NoiseModel, SceneConfig
from src.common.types import AblationStage, ClusteringMode, NoiseKind


class NoiseLevel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    # the seed of this model is replaced by the scene seed
    noise: NoiseModel


DEFAULT_NOISE_LEVELS: tuple[NoiseLevel, ...] = (
    NoiseLevel(name="exact", noise=NoiseModel()),
    NoiseLevel(name="gaussian", noise=NoiseModel(kind=NoiseKind.GAUSSIAN, sigma=0.03)),
    NoiseLevel(
        name="boundary_pull",
        noise=NoiseModel(kind=NoiseKind.BOUNDARY_PULL, sigma=0.005, boundary_pull=1.0),
    ),
)

DEFAULT_SCENE = SceneConfig(
    n_objects=6,
    room_extent=(6.0, 6.0),
    adjacency_probability=0.6,
    adjacency_gap=0.0,
)


class BenchSuite(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "default"
    scene: SceneConfig = DEFAULT_SCENE
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    noise_levels: tuple[NoiseLevel, ...] = DEFAULT_NOISE_LEVELS
    modes: tuple[ClusteringMode, ...] = (ClusteringMode.BINARY, ClusteringMode.DISTANCE)
    pipeline: PipelineConfig = PipelineConfig()

    sweeps: bool = True
    # noise level the sweeps run on (None = first level)
    sweep_noise: str | None = None
    sweep_r_d: tuple[float, ...] = (0.02, 0.04, 0.06)
    sweep_theta_d: tuple[int, ...] = (10, 20, 30, 40, 50)
    sweep_k: tuple[int, ...] = tuple(range(1, 11))

    # scene-level workers, 0 → env.THREADS
    threads: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check(self) -> "BenchSuite":
        if not self.seeds:
            raise ValueError("suite needs at least one seed")
        if not self.noise_levels:
            raise ValueError("suite needs at least one noise level")
        names = [level.name for level in self.noise_levels]
        if len(set(names)) != len(names):
            raise ValueError("noise level names must be unique")
        if self.sweep_noise is not None and self.sweep_noise not in names:
            raise ValueError(f"sweep_noise '{self.sweep_noise}' is not a noise level")
        return self

    def noise_level(self, name: str | None) -> NoiseLevel:
        if name is None:
            return self.noise_levels[0]
        return next(level for level in self.noise_levels if level.name == name)


class BenchRow(BaseModel):
    variant: str
    noise: str
    seed: int
    map: float | None
    ap50: float | None
    ap25: float | None
    n_gt: int
    n_proposals: int
    coverage: float | None
    coverage_before_filter: float | None
    timings: dict[str, float] = {}


class SweepPoint(BaseModel):
    r_d: float
    theta_d: int
    k: int
    mean_map: float | None
    mean_ap50: float | None


class SummaryRow(BaseModel):
    variant: str
    noise: str
    n_scenes: int
    mean_map: float | None
    mean_ap50: float | None
    mean_ap25: float | None
    mean_coverage: float | None


class BenchReport(BaseModel):
    suite: dict
    rows: list[BenchRow]
    sweeps: dict[str, list[SweepPoint]] = {}
    summary: list[SummaryRow]


class AblationReport(BaseModel):
    stage: AblationStage
    suite: dict
    rows: list[BenchRow]
    summary: list[SummaryRow]
