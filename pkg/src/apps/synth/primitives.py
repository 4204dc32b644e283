"""
Uniform-area surface sampling of the object primitives.

Every sampler takes the footprint centre ``(x, y)``, sits the shape on the
floor (z = 0) and returns ``(n, 3)`` points drawn with the given generator.
Shapes are axis aligned.
"""

import numpy as np

from src.common.types import Primitive


def _box_faces(lo: np.ndarray, hi: np.ndarray) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """(origin, edge_u, edge_v) of the six faces of an axis-aligned box."""
    dx, dy, dz = hi - lo
    ex, ey, ez = np.array([dx, 0, 0]), np.array([0, dy, 0]), np.array([0, 0, dz])
    return [
        (lo, ex, ey),
        (lo + ez, ex, ey),
        (lo, ex, ez),
        (lo + ey, ex, ez),
        (lo, ey, ez),
        (lo + ex, ey, ez),
    ]


def _sample_faces(rng: np.random.Generator, faces, n: int) -> np.ndarray:
    areas = np.array([np.linalg.norm(np.cross(u, v)) for _, u, v in faces])
    which = rng.choice(len(faces), size=n, p=areas / areas.sum())
    uv = rng.random((n, 2))
    origins = np.stack([f[0] for f in faces])[which]
    us = np.stack([f[1] for f in faces])[which]
    vs = np.stack([f[2] for f in faces])[which]
    return origins + uv[:, :1] * us + uv[:, 1:] * vs


def _l_shape_boxes(center: np.ndarray, size: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Seat block (lower half) plus a back rest along the far y edge."""
    w, d, h = size
    x, y = center
    seat_h = 0.5 * h
    back_d = 0.2 * d
    seat = (np.array([x - w / 2, y - d / 2, 0.0]), np.array([x + w / 2, y + d / 2, seat_h]))
    back = (np.array([x - w / 2, y + d / 2 - back_d, seat_h]), np.array([x + w / 2, y + d / 2, h]))
    return [seat, back]


def surface_area(primitive: Primitive, size: np.ndarray) -> float:
    w, d, h = size
    match primitive:
        case Primitive.BOX:
            return 2.0 * (w * d + w * h + d * h)
        case Primitive.SPHERE:
            r = min(w, d, h) / 2.0
            return 4.0 * np.pi * r * r
        case Primitive.CYLINDER:
            r = min(w, d) / 2.0
            return 2.0 * np.pi * r * h + 2.0 * np.pi * r * r
        case Primitive.L_SHAPE:
            total = 0.0
            for lo, hi in _l_shape_boxes(np.zeros(2), np.asarray(size)):
                a, b, c = hi - lo
                total += 2.0 * (a * b + a * c + b * c)
            return total
    raise ValueError(f"unknown primitive {primitive!r}")


def sample_surface(
    rng: np.random.Generator,
    primitive: Primitive,
    center: np.ndarray,
    size: np.ndarray,
    n: int,
) -> np.ndarray:
    center = np.asarray(center, dtype=np.float64)
    size = np.asarray(size, dtype=np.float64)
    w, d, h = size
    x, y = center
    match primitive:
        case Primitive.BOX:
            lo = np.array([x - w / 2, y - d / 2, 0.0])
            return _sample_faces(rng, _box_faces(lo, lo + size), n)
        case Primitive.L_SHAPE:
            faces = []
            for lo, hi in _l_shape_boxes(center, size):
                faces.extend(_box_faces(lo, hi))
            return _sample_faces(rng, faces, n)
        case Primitive.SPHERE:
            r = min(w, d, h) / 2.0
            v = rng.normal(size=(n, 3))
            v /= np.linalg.norm(v, axis=1, keepdims=True)
            return np.array([x, y, r]) + r * v
        case Primitive.CYLINDER:
            r = min(w, d) / 2.0
            side = 2.0 * np.pi * r * h
            cap = np.pi * r * r
            part = rng.choice(3, size=n, p=np.array([side, cap, cap]) / (side + 2 * cap))
            theta = rng.random(n) * 2.0 * np.pi
            # sqrt keeps cap samples uniform in area
            radial = np.where(part == 0, r, r * np.sqrt(rng.random(n)))
            z = np.select([part == 0, part == 1], [rng.random(n) * h, np.zeros(n)], h)
            return np.column_stack([x + radial * np.cos(theta), y + radial * np.sin(theta), z])
    raise ValueError(f"unknown primitive {primitive!r}")


def footprint_half_extents(primitive: Primitive, size: np.ndarray) -> np.ndarray:
    w, d, h = size
    if primitive == Primitive.SPHERE:
        r = min(w, d, h) / 2.0
        return np.array([r, r])
    if primitive == Primitive.CYLINDER:
        r = min(w, d) / 2.0
        return np.array([r, r])
    return np.array([w / 2.0, d / 2.0])


def sample_floor(rng: np.random.Generator, extent: tuple[float, float], n: int) -> np.ndarray:
    xy = rng.random((n, 2)) * np.asarray(extent)
    return np.column_stack([xy, np.zeros(n)])
