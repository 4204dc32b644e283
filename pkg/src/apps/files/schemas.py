"""
On-disk document schemas: cloud file header and results file.
"""

from pydantic import BaseModel, ConfigDict, Field

from src.apps.clouds.schemas import ClassCatalog
from src.apps.evaluation.schemas import EvalReport

CLOUD_MAGIC = "PBCLOUD"
CLOUD_VERSION = 1
RESULTS_SCHEMA_VERSION = 1


class Provenance(BaseModel):
    model_config = ConfigDict(frozen=True)

    generator: str | None = None
    seed: int | None = None
    config: dict | None = None


class CloudHeader(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    magic: str
    version: int
    count: int = Field(ge=0)
    catalog: ClassCatalog
    provenance: Provenance = Provenance()


class CloudRef(BaseModel):
    path: str
    count: int


class InstanceRecord(BaseModel):
    id: int
    class_id: int
    class_name: str
    score: float
    # [start, length] runs over sorted point indices
    mask_rle: list[tuple[int, int]]


class ResultsFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: int = RESULTS_SCHEMA_VERSION
    cloud: CloudRef
    config: dict
    instances: list[InstanceRecord]
    counts: dict
    eval: EvalReport | None = None
    # wall-clock seconds per stage; excluded from determinism checks
    timings: dict[str, float] = {}
