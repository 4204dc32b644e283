"""
Readers and writers for cloud files (.npz, authoritative), ASCII PLY
interchange, catalog / config JSON and results files.

Every writer goes through ``atomic_path``: a failed write never leaves a
file behind that would parse as valid.
"""

import json
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
import pydantic
import structlog
from pyntcloud import PyntCloud

from src.apps.clouds.models import InstanceProposal, LabeledCloud
from src.apps.clouds.schemas import ClassCatalog
from src.apps.evaluation.schemas import EvalReport
from src.apps.files.schemas import (
    CLOUD_MAGIC,
    CLOUD_VERSION,
    RESULTS_SCHEMA_VERSION,
    CloudHeader,
    CloudRef,
    InstanceRecord,
    Provenance,
    ResultsFile,
)
from src.apps.files.utils import atomic_path, rle_decode, rle_encode, write_text_atomic
from src.apps.pipeline.schemas import PipelineConfig
from src.apps.pipeline.services import SegmentationResult
from src.common.exceptions import ApplicationError, MalformedFileError, NotFoundError, ValidationError
from src.config.env import env

logger = structlog.get_logger(__name__)

_OPTIONAL_COLUMNS = ("offsets", "semantic_scores", "gt_instance", "gt_semantic")


@dataclass(frozen=True, eq=False)
class CloudRecord:
    cloud: LabeledCloud
    catalog: ClassCatalog | None
    provenance: Provenance


def _existing(path: str | Path) -> Path:
    path = Path(path)
    if not path.is_file():
        raise NotFoundError(f"no such file: {path}")
    return path


def dump_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=env.RESULTS_INDENT) + "\n"


def load_model[M: pydantic.BaseModel](path: str | Path, model: type[M]) -> M:
    """Validate a JSON file against a pydantic model."""
    path = _existing(path)
    try:
        return model.model_validate_json(path.read_bytes())
    except pydantic.ValidationError as exc:
        raise MalformedFileError(f"{path}: {exc.errors(include_url=False)}") from exc


def write_model(path: str | Path, model: pydantic.BaseModel) -> None:
    write_text_atomic(path, dump_json(model.model_dump(mode="json")))


# ── Cloud files (.npz) ──────────────────────────────────────────────────


def write_cloud(
    path: str | Path,
    cloud: LabeledCloud,
    catalog: ClassCatalog,
    *,
    provenance: Provenance | dict | None = None,
) -> None:
    header = CloudHeader(
        magic=CLOUD_MAGIC,
        version=CLOUD_VERSION,
        count=cloud.n_points,
        catalog=catalog,
        provenance=Provenance.model_validate(provenance or {}),
    )
    columns = {"xyz": cloud.points, "semantic": cloud.semantic}
    for name in _OPTIONAL_COLUMNS:
        if getattr(cloud, name) is not None:
            columns[name] = getattr(cloud, name)
    raw = json.dumps(header.model_dump(mode="json"), sort_keys=True).encode()

    with atomic_path(path) as tmp:
        with tmp.open("wb") as fh:
            np.savez(fh, header=np.frombuffer(raw, dtype=np.uint8), **columns)
    logger.info("cloud_written", path=str(path), count=cloud.n_points, columns=sorted(columns))


def read_cloud(path: str | Path) -> CloudRecord:
    path = _existing(path)
    try:
        with np.load(path, allow_pickle=False) as archive:
            arrays = {name: archive[name] for name in archive.files}
    except (zipfile.BadZipFile, ValueError, OSError, EOFError) as exc:
        raise MalformedFileError(f"{path}: not a cloud archive ({exc})") from exc

    for required in ("header", "xyz", "semantic"):
        if required not in arrays:
            raise MalformedFileError(f"{path}: missing '{required}' entry")
    try:
        header = CloudHeader.model_validate_json(arrays["header"].tobytes())
    except pydantic.ValidationError as exc:
        raise MalformedFileError(f"{path}: bad header: {exc.errors(include_url=False)}") from exc
    if header.magic != CLOUD_MAGIC:
        raise MalformedFileError(f"{path}: bad magic {header.magic!r}")
    if header.version != CLOUD_VERSION:
        raise MalformedFileError(f"{path}: unsupported version {header.version}")
    if len(arrays["xyz"]) != header.count:
        raise MalformedFileError(f"{path}: header count {header.count} != {len(arrays['xyz'])} rows")

    try:
        cloud = LabeledCloud(
            points=arrays["xyz"],
            semantic=arrays["semantic"],
            **{name: arrays.get(name) for name in _OPTIONAL_COLUMNS},
        )
    except ApplicationError as exc:
        raise MalformedFileError(f"{path}: {exc.message}") from exc
    if cloud.n_points and cloud.semantic.max() >= header.catalog.n_classes:
        raise MalformedFileError(f"{path}: semantic id outside the catalog")
    if cloud.gt_semantic is not None and cloud.n_points:
        if cloud.gt_semantic.max() >= header.catalog.n_classes:
            raise MalformedFileError(f"{path}: gt_semantic id outside the catalog")
    return CloudRecord(cloud=cloud, catalog=header.catalog, provenance=header.provenance)


# ── ASCII PLY ───────────────────────────────────────────────────────────


def write_ply(path: str | Path, cloud: LabeledCloud) -> None:
    data = {
        "x": cloud.points[:, 0],
        "y": cloud.points[:, 1],
        "z": cloud.points[:, 2],
        "semantic": cloud.semantic.astype(np.int32),
    }
    if cloud.offsets is not None:
        data.update(ox=cloud.offsets[:, 0], oy=cloud.offsets[:, 1], oz=cloud.offsets[:, 2])
    if cloud.has_ground_truth:
        data.update(
            gt_instance=cloud.gt_instance.astype(np.int32),
            gt_semantic=cloud.gt_semantic.astype(np.int32),
        )
    with atomic_path(path) as tmp:
        PyntCloud(pd.DataFrame(data)).to_file(str(tmp), as_text=True)
    logger.info("ply_written", path=str(path), count=cloud.n_points)


def read_ply(path: str | Path) -> LabeledCloud:
    path = _existing(path)
    try:
        frame = PyntCloud.from_file(str(path)).points
    except Exception as exc:
        raise MalformedFileError(f"{path}: unreadable PLY ({exc})") from exc

    missing = {"x", "y", "z", "semantic"} - set(frame.columns)
    if missing:
        raise MalformedFileError(f"{path}: missing vertex properties {sorted(missing)}")

    def column(*names):
        if not set(names) <= set(frame.columns):
            return None
        return frame[list(names)].to_numpy()

    try:
        return LabeledCloud(
            points=frame[["x", "y", "z"]].to_numpy(dtype=np.float64),
            semantic=frame["semantic"].to_numpy(dtype=np.int64),
            offsets=column("ox", "oy", "oz"),
            gt_instance=None if (c := column("gt_instance")) is None else c.ravel(),
            gt_semantic=None if (c := column("gt_semantic")) is None else c.ravel(),
        )
    except ApplicationError as exc:
        raise MalformedFileError(f"{path}: {exc.message}") from exc


def load_cloud(path: str | Path, catalog: ClassCatalog | None = None) -> CloudRecord:
    """Cloud file or PLY by suffix; an explicit catalog overrides the header's."""
    if Path(path).suffix.lower() == ".ply":
        if catalog is None:
            raise ValidationError("PLY input carries no class catalog: pass --catalog")
        return CloudRecord(cloud=read_ply(path), catalog=catalog, provenance=Provenance())
    record = read_cloud(path)
    if catalog is not None:
        return CloudRecord(cloud=record.cloud, catalog=catalog, provenance=record.provenance)
    return record


# ── Results ─────────────────────────────────────────────────────────────


def build_results(
    *,
    cloud_path: str | Path,
    cloud: LabeledCloud,
    catalog: ClassCatalog,
    config: PipelineConfig,
    result: SegmentationResult,
    report: EvalReport | None = None,
) -> ResultsFile:
    return ResultsFile(
        schema_version=RESULTS_SCHEMA_VERSION,
        cloud=CloudRef(path=str(cloud_path), count=cloud.n_points),
        config=config.model_dump(mode="json"),
        instances=[
            InstanceRecord(
                id=i,
                class_id=p.class_id,
                class_name=catalog.name_of(p.class_id),
                score=p.score,
                mask_rle=rle_encode(p.point_indices),
            )
            for i, p in enumerate(result.proposals)
        ],
        counts=result.metadata.counts(),
        eval=report,
        timings=result.metadata.timings,
    )


def results_proposals(results: ResultsFile, cloud: LabeledCloud) -> list[InstanceProposal]:
    """Decode the instances of a results file against the cloud they refer to."""
    if results.cloud.count != cloud.n_points:
        raise ValidationError(
            f"results refer to a cloud of {results.cloud.count} points, got {cloud.n_points}"
        )
    proposals = []
    for record in results.instances:
        indices = rle_decode(record.mask_rle, cloud.n_points)
        if indices.size == 0:
            raise MalformedFileError(f"instance {record.id} has an empty mask")
        proposals.append(
            InstanceProposal(
                point_indices=indices,
                class_id=record.class_id,
                centroid=cloud.points[indices].mean(axis=0),
                score=record.score,
            )
        )
    return proposals


def read_results(path: str | Path) -> ResultsFile:
    results = load_model(path, ResultsFile)
    if results.schema_version != RESULTS_SCHEMA_VERSION:
        raise MalformedFileError(f"{path}: unsupported schema_version {results.schema_version}")
    return results
