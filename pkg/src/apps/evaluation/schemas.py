"""
Evaluation report schema (serialized into results files).
"""

from pydantic import BaseModel, ConfigDict


class ClassAP(BaseModel):
    model_config = ConfigDict(frozen=True)

    class_id: int
    name: str
    ap: float
    ap50: float
    ap25: float
    precision50: float
    recall50: float
    n_gt: int
    n_pred: int


class Diagnostics(BaseModel):
    model_config = ConfigDict(frozen=True)

    offset_distance: float | None = None
    offset_direction: float | None = None
    direction_excluded: int = 0
    mean_dice: float | None = None
    coverage: float | None = None


class EvalReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    # None when the ground truth holds no instance at all
    map: float | None
    ap50: float | None
    ap25: float | None
    mprec50: float | None
    mrec50: float | None
    # mean AP over classes at every evaluated overlap, keyed "0.50", "0.55", ...
    ap_by_overlap: dict[str, float]
    per_class: list[ClassAP]
    n_gt: int
    n_pred: int
    diagnostics: Diagnostics | None = None
