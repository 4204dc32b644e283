"""
Static spatial index with exact closed-ball radius and kNN queries.

Distances are Euclidean. Every membership test compares the squared
distance ``sum((a - b) ** 2)`` against ``r * r``; the kd-tree only produces
a slightly inflated candidate superset which is then filtered with that
expression, so results are identical to a linear scan using the same test.
"""

from dataclasses import dataclass

import numpy as np
import structlog
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from src.apps.clouds.models import Point3, as_points
from src.common.exceptions import ValidationError

logger = structlog.get_logger(__name__)

# relative inflation of candidate radii before the exact filter
_INFLATE = 1e-9
# coincident-cell side as a fraction of the query radius
_CELL_FRACTION = 1e-6
_LEAFSIZE = 32


def squared_distances(points: np.ndarray, center: np.ndarray) -> np.ndarray:
    diff = points - center
    return (diff * diff).sum(axis=-1)


def _candidate_radius(r: float) -> float:
    return r * (1.0 + _INFLATE) + 1e-12


def _check_radius(r: float) -> float:
    r = float(r)
    if not r >= 0.0:
        raise ValidationError(f"radius must be >= 0, got {r}")
    return r


class SpatialIndex:
    """Immutable kd-tree over a fixed point set (duplicates kept individually)."""

    def __init__(self, points):
        pts = np.array(as_points(points), dtype=np.float64, copy=True)
        pts.flags.writeable = False
        self._points = pts
        self._tree = cKDTree(pts, leafsize=_LEAFSIZE) if len(pts) else None

    def __len__(self) -> int:
        return len(self._points)

    @property
    def points(self) -> np.ndarray:
        return self._points

    # ── Single-centre queries ───────────────────────────────────────────

    def radius_query(self, center: Point3, r: float) -> np.ndarray:
        """Indices ``i`` with ``|points[i] - center| <= r``, ascending."""
        r = _check_radius(r)
        if self._tree is None:
            return np.zeros(0, dtype=np.int64)
        center = np.asarray(center, dtype=np.float64).reshape(3)
        candidates = np.asarray(
            self._tree.query_ball_point(center, _candidate_radius(r), return_sorted=False),
            dtype=np.int64,
        )
        keep = squared_distances(self._points[candidates], center) <= r * r
        return np.sort(candidates[keep])

    def knn_query(self, center: Point3, k: int) -> list[tuple[int, float]]:
        """``min(k, N)`` nearest points as ``(index, distance)``; ties by lower index."""
        if k < 1:
            raise ValidationError(f"k must be >= 1, got {k}")
        if self._tree is None:
            return []
        center = np.asarray(center, dtype=np.float64).reshape(3)
        k = min(int(k), len(self._points))
        dist, _ = self._tree.query(center, k=k)
        kth = float(np.atleast_1d(dist)[-1])
        # every point tied with the k-th must be considered for the index tie-break
        candidates = np.asarray(
            self._tree.query_ball_point(center, _candidate_radius(kth), return_sorted=False),
            dtype=np.int64,
        )
        d2 = squared_distances(self._points[candidates], center)
        order = np.lexsort((candidates, d2))[:k]
        return [(int(candidates[i]), float(np.sqrt(d2[i]))) for i in order]

    # ── Batched queries ─────────────────────────────────────────────────

    def nearest(self, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Nearest indexed point for every centre (lower index on ties) and its squared distance."""
        centers = as_points(centers)
        if self._tree is None:
            raise ValidationError("nearest() on an empty index")
        if len(centers) == 0:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float64)
        dist, _ = self._tree.query(centers, k=1)
        out = np.empty(len(centers), dtype=np.int64)
        out_d2 = np.empty(len(centers), dtype=np.float64)
        for row, (center, d) in enumerate(zip(centers, dist, strict=True)):
            candidates = np.asarray(
                self._tree.query_ball_point(center, _candidate_radius(float(d))),
                dtype=np.int64,
            )
            d2 = squared_distances(self._points[candidates], center)
            best = np.lexsort((candidates, d2))[0]
            out[row] = candidates[best]
            out_d2[row] = d2[best]
        return out, out_d2

    def cross_pairs(
        self, centers: np.ndarray, r: float, *, chunk: int = 8192
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        All ``(center_row, point_index, squared_distance)`` triples within the
        closed ball of radius ``r``. Rows come out grouped by centre.
        """
        r = _check_radius(r)
        centers = as_points(centers)
        empty = (np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.float64))
        if self._tree is None or len(centers) == 0:
            return empty
        rows, cols, d2s = [], [], []
        for start in range(0, len(centers), chunk):
            block = centers[start : start + chunk]
            hits = self._tree.query_ball_point(block, _candidate_radius(r), return_sorted=False)
            lengths = np.fromiter((len(h) for h in hits), dtype=np.int64, count=len(hits))
            if lengths.sum() == 0:
                continue
            q = np.repeat(np.arange(start, start + len(block), dtype=np.int64), lengths)
            p = np.concatenate([np.asarray(h, dtype=np.int64) for h in hits if h])
            d2 = squared_distances(self._points[p], centers[q])
            keep = d2 <= r * r
            rows.append(q[keep])
            cols.append(p[keep])
            d2s.append(d2[keep])
        if not rows:
            return empty
        return np.concatenate(rows), np.concatenate(cols), np.concatenate(d2s)


def build(points) -> SpatialIndex:
    return SpatialIndex(points)


# ═════════════════════════════════════════════════════════════════════════
#  Radius graphs over one point set
# ═════════════════════════════════════════════════════════════════════════


@dataclass(frozen=True, eq=False)
class _CellGraph:
    """
    Points bucketed into tiny cells (side ``1e-6 * r``); members of one cell
    are always mutually within ``r``. Cell pairs whose representatives are
    clearly inside ``r`` are ``sure``; pairs near the boundary are
    ``ambiguous`` and must be resolved point by point.
    """

    cell_of: np.ndarray
    sizes: np.ndarray
    order: np.ndarray
    starts: np.ndarray
    sure: np.ndarray
    ambiguous: np.ndarray

    def members(self, cell: int) -> np.ndarray:
        return self.order[self.starts[cell] : self.starts[cell + 1]]


def _cell_graph(points: np.ndarray, r: float) -> _CellGraph:
    if r <= 0.0:
        raise ValidationError(f"radius graph needs r > 0, got {r}")
    delta = r * _CELL_FRACTION
    keys = np.floor(points / delta).astype(np.int64)
    _, first, cell_of, sizes = np.unique(
        keys, axis=0, return_index=True, return_inverse=True, return_counts=True
    )
    cell_of = cell_of.ravel()
    order = np.argsort(cell_of, kind="stable")
    starts = np.concatenate([[0], np.cumsum(sizes)])

    reps = points[first]
    slack = 4.0 * delta
    pairs = cKDTree(reps, leafsize=_LEAFSIZE).query_pairs(r + slack, output_type="ndarray")
    pairs = pairs.astype(np.int64).reshape(-1, 2)
    dist = np.sqrt(squared_distances(reps[pairs[:, 0]], reps[pairs[:, 1]]))
    is_sure = dist <= r - slack
    logger.debug(
        "radius_graph_built",
        n_points=len(points),
        n_cells=len(sizes),
        n_pairs=len(pairs),
        n_ambiguous=int((~is_sure).sum()),
    )
    return _CellGraph(
        cell_of=cell_of,
        sizes=sizes,
        order=order,
        starts=starts,
        sure=pairs[is_sure],
        ambiguous=pairs[~is_sure],
    )


def _within_block(a: np.ndarray, b: np.ndarray, r: float) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return (diff * diff).sum(axis=-1) <= r * r


def self_radius_counts(points, r: float) -> np.ndarray:
    """For every point, how many points of the same set lie within ``r`` (itself included)."""
    r = _check_radius(r)
    pts = as_points(points)
    if len(pts) == 0:
        return np.zeros(0, dtype=np.int64)
    graph = _cell_graph(pts, r)
    per_cell = graph.sizes.astype(np.int64).copy()
    if len(graph.sure):
        a, b = graph.sure[:, 0], graph.sure[:, 1]
        per_cell += np.bincount(a, weights=graph.sizes[b], minlength=len(per_cell)).astype(np.int64)
        per_cell += np.bincount(b, weights=graph.sizes[a], minlength=len(per_cell)).astype(np.int64)
    counts = per_cell[graph.cell_of]
    for a, b in graph.ambiguous:
        ma, mb = graph.members(a), graph.members(b)
        hit = _within_block(pts[ma], pts[mb], r)
        np.add.at(counts, ma, hit.sum(axis=1))
        np.add.at(counts, mb, hit.sum(axis=0))
    return counts


def radius_components(points, r: float) -> tuple[int, np.ndarray]:
    """
    Connected components of the graph linking points within ``r``.
    Labels are arbitrary; callers canonicalise them.
    """
    r = _check_radius(r)
    pts = as_points(points)
    if len(pts) == 0:
        return 0, np.zeros(0, dtype=np.int64)
    graph = _cell_graph(pts, r)
    edges = [graph.sure]
    confirmed = [
        (a, b)
        for a, b in graph.ambiguous
        if _within_block(pts[graph.members(a)], pts[graph.members(b)], r).any()
    ]
    if confirmed:
        edges.append(np.asarray(confirmed, dtype=np.int64))
    edges = np.concatenate(edges) if edges else np.zeros((0, 2), dtype=np.int64)
    m = len(graph.sizes)
    adjacency = coo_matrix(
        (np.ones(len(edges), dtype=np.int8), (edges[:, 0], edges[:, 1])), shape=(m, m)
    ).tocsr()
    n_comp, cell_labels = connected_components(adjacency, directed=False)
    return int(n_comp), cell_labels[graph.cell_of].astype(np.int64)
