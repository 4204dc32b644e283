"""
Domain value objects shared by the whole segmentation pipeline.

Coordinates are float64 ``(N, 3)`` arrays; a single point is a ``(3,)``
array (``Point3``). Arrays are copied and made read-only on construction,
so instances can be shared freely between threads.
"""

from dataclasses import dataclass, replace

import numpy as np

from src.common.exceptions import ValidationError

# Ground-truth instance id reserved for background points.
BACKGROUND_INSTANCE = -1

type Point3 = np.ndarray


def _frozen(values, dtype, name: str, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    if arr.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


def as_points(values) -> np.ndarray:
    """Coerce a list of Point3 into a finite ``(N, 3)`` float64 array."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return np.zeros((0, 3), dtype=np.float64)
    arr = arr.reshape(-1, 3) if arr.ndim == 1 else arr
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValidationError(f"points must have shape (N, 3), got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError("points must be finite (no NaN/Inf)")
    return arr


@dataclass(frozen=True, eq=False)
class LabeledCloud:
    points: np.ndarray
    semantic: np.ndarray
    offsets: np.ndarray | None = None
    semantic_scores: np.ndarray | None = None
    gt_instance: np.ndarray | None = None
    gt_semantic: np.ndarray | None = None

    def __post_init__(self):
        points = _frozen(as_points(self.points), np.float64, "points", 2)
        n = len(points)
        object.__setattr__(self, "points", points)

        semantic = _frozen(self.semantic, np.int64, "semantic", 1)
        if len(semantic) != n:
            raise ValidationError(f"semantic has {len(semantic)} entries, expected {n}")
        if n and semantic.min() < 0:
            raise ValidationError("semantic ids must be >= 0")
        object.__setattr__(self, "semantic", semantic)

        if self.offsets is not None:
            offsets = _frozen(np.asarray(self.offsets, dtype=np.float64).reshape(-1, 3),
                              np.float64, "offsets", 2)
            if len(offsets) != n:
                raise ValidationError(f"offsets has {len(offsets)} rows, expected {n}")
            if not np.isfinite(offsets).all():
                raise ValidationError("offsets must be finite")
            object.__setattr__(self, "offsets", offsets)

        if self.semantic_scores is not None:
            scores = _frozen(self.semantic_scores, np.float64, "semantic_scores", 2)
            if len(scores) != n:
                raise ValidationError(f"semantic_scores has {len(scores)} rows, expected {n}")
            if scores.size and (scores.min() < 0.0 or scores.max() > 1.0):
                raise ValidationError("semantic_scores entries must lie in [0, 1]")
            object.__setattr__(self, "semantic_scores", scores)

        for name in ("gt_instance", "gt_semantic"):
            value = getattr(self, name)
            if value is None:
                continue
            arr = _frozen(value, np.int64, name, 1)
            if len(arr) != n:
                raise ValidationError(f"{name} has {len(arr)} entries, expected {n}")
            object.__setattr__(self, name, arr)

        if self.gt_instance is not None and n and self.gt_instance.min() < BACKGROUND_INSTANCE:
            raise ValidationError(f"gt_instance ids must be >= {BACKGROUND_INSTANCE}")
        if self.gt_semantic is not None and n and self.gt_semantic.min() < 0:
            raise ValidationError("gt_semantic ids must be >= 0")

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def has_ground_truth(self) -> bool:
        return self.gt_instance is not None and self.gt_semantic is not None

    def with_predictions(
        self,
        *,
        semantic: np.ndarray | None = None,
        offsets: np.ndarray | None = None,
    ) -> "LabeledCloud":
        changes = {}
        if semantic is not None:
            changes["semantic"] = semantic
        if offsets is not None:
            changes["offsets"] = offsets
        return replace(self, **changes)

    def permuted(self, order: np.ndarray) -> "LabeledCloud":
        """Same cloud with points reordered: new point i is old point order[i]."""
        order = np.asarray(order, dtype=np.int64)

        def take(arr):
            return None if arr is None else arr[order]

        return LabeledCloud(
            points=self.points[order],
            semantic=self.semantic[order],
            offsets=take(self.offsets),
            semantic_scores=take(self.semantic_scores),
            gt_instance=take(self.gt_instance),
            gt_semantic=take(self.gt_semantic),
        )


@dataclass(frozen=True, eq=False)
class InstanceProposal:
    point_indices: np.ndarray
    class_id: int
    centroid: np.ndarray
    score: float = 1.0

    def __post_init__(self):
        indices = np.asarray(self.point_indices, dtype=np.int64).ravel()
        if indices.size == 0:
            raise ValidationError("proposal point set is empty")
        unique = np.unique(indices)
        if len(unique) != len(indices):
            raise ValidationError("proposal point indices must be duplicate-free")
        if unique[0] < 0:
            raise ValidationError("proposal point indices must be >= 0")
        unique.flags.writeable = False
        object.__setattr__(self, "point_indices", unique)

        centroid = np.array(self.centroid, dtype=np.float64).reshape(3)
        centroid.flags.writeable = False
        object.__setattr__(self, "centroid", centroid)

        score = float(self.score)
        if not 0.0 <= score <= 1.0:
            raise ValidationError(f"proposal score must lie in [0, 1], got {score}")
        object.__setattr__(self, "score", score)
        object.__setattr__(self, "class_id", int(self.class_id))

    @property
    def size(self) -> int:
        return len(self.point_indices)

    def with_score(self, score: float) -> "InstanceProposal":
        return replace(self, score=score)
