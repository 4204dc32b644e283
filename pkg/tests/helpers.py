"""Shared builders and brute-force oracles for the test suite."""

import numpy as np

from src.apps.clouds.models import BACKGROUND_INSTANCE, LabeledCloud
from src.apps.clouds.services import ground_truth_offsets


def blob_cloud(
    rng: np.random.Generator,
    centers,
    classes,
    *,
    n_per: int = 80,
    spread: float = 0.1,
    n_floor: int = 0,
    offsets: str = "gt",
) -> LabeledCloud:
    """
    Gaussian blobs, one GT instance per centre, plus optional floor points
    (class 0). ``offsets="gt"`` gives the exact oracle offsets.
    """
    pts, inst, sem = [], [], []
    for i, (center, class_id) in enumerate(zip(centers, classes, strict=True)):
        pts.append(rng.normal(center, spread, size=(n_per, 3)))
        inst.append(np.full(n_per, i))
        sem.append(np.full(n_per, class_id))
    if n_floor:
        floor = rng.uniform(-5, 5, size=(n_floor, 3))
        floor[:, 2] = -1.0
        pts.append(floor)
        inst.append(np.full(n_floor, BACKGROUND_INSTANCE))
        sem.append(np.zeros(n_floor, dtype=np.int64))
    cloud = LabeledCloud(
        points=np.concatenate(pts),
        semantic=np.concatenate(sem),
        gt_instance=np.concatenate(inst),
        gt_semantic=np.concatenate(sem),
    )
    if offsets == "gt":
        cloud = cloud.with_predictions(offsets=ground_truth_offsets(cloud))
    return cloud


def brute_counts(points: np.ndarray, r: float) -> np.ndarray:
    counts = np.zeros(len(points), dtype=np.int64)
    for start in range(0, len(points), 256):
        diff = points[start : start + 256, None, :] - points[None, :, :]
        counts[start : start + 256] = ((diff * diff).sum(axis=-1) <= r * r).sum(axis=1)
    return counts


def brute_components(points: np.ndarray, r: float) -> np.ndarray:
    """Union-find over the closed-ball graph; label = smallest member index."""
    n = len(points)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    diff = points[:, None, :] - points[None, :, :]
    linked = (diff * diff).sum(axis=-1) <= r * r
    for i, j in zip(*np.nonzero(np.triu(linked, k=1)), strict=True):
        a, b = find(int(i)), find(int(j))
        if a != b:
            parent[max(a, b)] = min(a, b)
    return np.array([find(i) for i in range(n)])


def same_partition(a: np.ndarray, b: np.ndarray) -> bool:
    """Two label vectors describe the same partition (labels may differ)."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return False
    pairs = np.unique(np.stack([a, b], axis=1), axis=0)
    return len(pairs) == len(np.unique(a)) == len(np.unique(b))
