"""
Atomic file writes and run-length encoded point masks.
"""

import os
import tempfile
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from src.common.exceptions import MalformedFileError


@contextmanager
def atomic_path(path: str | Path) -> Iterator[Path]:
    """
    Yield a temporary path next to ``path``; it replaces ``path`` only when
    the block exits cleanly, otherwise it is removed.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=path.suffix or ".tmp", dir=path.parent)
    os.close(fd)
    tmp = Path(tmp)
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def write_text_atomic(path: str | Path, text: str) -> None:
    with atomic_path(path) as tmp:
        tmp.write_text(text, encoding="utf-8")


def rle_encode(indices: np.ndarray) -> list[list[int]]:
    """Sorted unique point indices → ``[[start, length], ...]`` runs."""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(indices) != 1) + 1
    starts = np.concatenate([[0], breaks])
    ends = np.concatenate([breaks, [indices.size]])
    return [[int(indices[s]), int(e - s)] for s, e in zip(starts, ends, strict=True)]


def rle_decode(runs, n_points: int | None = None) -> np.ndarray:
    runs = np.asarray(runs, dtype=np.int64).reshape(-1, 2)
    if (runs[:, 0] < 0).any() or (runs[:, 1] <= 0).any():
        raise MalformedFileError("mask runs need start >= 0 and length > 0")
    indices = np.concatenate([np.arange(s, s + n) for s, n in runs]) if len(runs) else np.zeros(0, np.int64)
    if indices.size and (np.diff(indices) <= 0).any():
        raise MalformedFileError("mask runs must be sorted and disjoint")
    if n_points is not None and indices.size and indices[-1] >= n_points:
        raise MalformedFileError(f"mask index {int(indices[-1])} outside a cloud of {n_points} points")
    return indices
