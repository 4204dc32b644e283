"""
Pipeline configuration and run metadata.
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.apps.binarize.services import DEFAULT_RADIUS, DEFAULT_THRESHOLD
from src.apps.clustering.services import DEFAULT_MIN_POINTS
from src.apps.local_scenes.services import DEFAULT_K
from src.apps.scoring.services import DEFAULT_NMS_IOU
from src.common.types import ClusteringMode, RefinerName, ScorerName


class PipelineConfig(BaseModel):
    """
    Knobs of one segmentation run. ``link_radius``, ``min_proposal_points``
    and ``merge_gap`` default to values derived from ``r_d`` / ``theta_d``.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    r_d: float = Field(default=DEFAULT_RADIUS, gt=0)
    theta_d: int = Field(default=DEFAULT_THRESHOLD, ge=0)
    link_radius: float | None = Field(default=None, gt=0)
    k: int = Field(default=DEFAULT_K, ge=0)
    nms_iou: float = Field(default=DEFAULT_NMS_IOU, ge=0, le=1)
    min_proposal_points: int | None = Field(default=None, ge=0)
    scorer: ScorerName = ScorerName.HEURISTIC
    mode: ClusteringMode = ClusteringMode.BINARY
    voting: bool = True
    multi_round_voting: bool = False
    distance_min_points: int = Field(default=DEFAULT_MIN_POINTS, ge=1)
    local_scenes: bool = True
    refiner: RefinerName = RefinerName.IDENTITY
    merge_min_weight: float = Field(default=0.5, ge=0, le=1)
    merge_gap: float | None = Field(default=None, gt=0)
    # 0 → env.THREADS
    threads: int = Field(default=0, ge=0)

    @model_validator(mode="before")
    @classmethod
    def _derive_defaults(cls, data):
        if not isinstance(data, dict):
            return data
        data = dict(data)
        r_d = data.get("r_d", DEFAULT_RADIUS)
        if data.get("link_radius") is None:
            data["link_radius"] = r_d
        if data.get("merge_gap") is None:
            data["merge_gap"] = r_d
        if data.get("min_proposal_points") is None:
            data["min_proposal_points"] = data.get("theta_d", DEFAULT_THRESHOLD)
        return data

    def with_overrides(self, **overrides) -> "PipelineConfig":
        """
        Copy with some ``None``-skipping overrides applied. A derived field
        that still equals its source follows the source when it changes.
        """
        data = self.model_dump()
        for derived, source in (
            ("link_radius", "r_d"),
            ("merge_gap", "r_d"),
            ("min_proposal_points", "theta_d"),
        ):
            if overrides.get(source) is not None and overrides.get(derived) is None:
                if data[derived] == data[source]:
                    data[derived] = None
        data.update({k: v for k, v in overrides.items() if v is not None})
        return PipelineConfig.model_validate(data)


class RunMetadata(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_points: int
    n_foreground: int
    n_hp: int = 0
    n_lp: int = 0
    # distance mode: points of components below distance_min_points
    n_ignored: int = 0
    n_unassignable: int = 0
    n_preliminary: int = 0
    n_after_filter: int = 0
    n_proposals: int = 0
    voting_rounds: int = 0
    n_fallback: int = 0
    # fraction of foreground points owned by some proposal before the size filter
    coverage_before_filter: float | None = None
    # seconds per stage; the only field that varies between identical runs
    timings: dict[str, float] = Field(default_factory=dict)

    def counts(self) -> dict:
        return self.model_dump(exclude={"timings"})
