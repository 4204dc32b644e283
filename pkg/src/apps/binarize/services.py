"""
Point-wise binarization on the offset branch.

Each foreground point gets a density: the number of shifted foreground
points inside the closed ball of radius ``r_d`` around it, itself included.
Points whose density is strictly greater than ``theta_d`` are high-density
points (HPs); the rest are low-density points (LPs).
"""

from dataclasses import dataclass

import numpy as np
import structlog

from src.apps.clouds.models import as_points
from src.apps.spatial.services import self_radius_counts
from src.common.exceptions import ValidationError

logger = structlog.get_logger(__name__)

DEFAULT_RADIUS = 0.04
DEFAULT_THRESHOLD = 30


@dataclass(frozen=True, eq=False)
class DensityField:
    counts: np.ndarray
    radius: float


@dataclass(frozen=True, eq=False)
class BinaryLabel:
    is_hp: np.ndarray
    threshold: int

    @property
    def is_lp(self) -> np.ndarray:
        return ~self.is_hp

    @property
    def n_hp(self) -> int:
        return int(self.is_hp.sum())

    @property
    def n_lp(self) -> int:
        return int(len(self.is_hp) - self.is_hp.sum())


def point_densities(shifted_foreground, r_d: float) -> DensityField:
    if not r_d > 0:
        raise ValidationError(f"r_d must be > 0, got {r_d}")
    pts = as_points(shifted_foreground)
    counts = self_radius_counts(pts, r_d)
    counts.flags.writeable = False
    return DensityField(counts=counts, radius=float(r_d))


def binarize(densities: DensityField, theta_d: int) -> BinaryLabel:
    if theta_d < 0:
        raise ValidationError(f"theta_d must be >= 0, got {theta_d}")
    is_hp = densities.counts > theta_d
    is_hp.flags.writeable = False
    label = BinaryLabel(is_hp=is_hp, threshold=int(theta_d))
    logger.debug(
        "points_binarized",
        radius=densities.radius,
        threshold=theta_d,
        n_hp=label.n_hp,
        n_lp=label.n_lp,
    )
    return label
