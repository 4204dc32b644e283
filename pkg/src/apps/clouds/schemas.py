"""
Class catalog: names, background flags and per-class mean sizes.

The catalog travels inside cloud file headers and as standalone JSON
catalog files, hence a pydantic model.
"""

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator


class ClassCatalog(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    names: tuple[str, ...]
    background: tuple[bool, ...]
    # r_m per class, meters; ignored (may be 0) for background classes
    mean_size: tuple[float, ...]
    # mean point count per instance, when known
    mean_count: tuple[float, ...] | None = None

    @model_validator(mode="after")
    def _check_shape(self) -> "ClassCatalog":
        n = len(self.names)
        if n == 0:
            raise ValueError("catalog must declare at least one class")
        if len(self.background) != n or len(self.mean_size) != n:
            raise ValueError("names, background and mean_size must have the same length")
        if self.mean_count is not None and len(self.mean_count) != n:
            raise ValueError("mean_count must have one entry per class")
        if all(self.background):
            raise ValueError("catalog needs at least one foreground class")
        for name, bg, size in zip(self.names, self.background, self.mean_size, strict=True):
            if not bg and not size > 0:
                raise ValueError(f"mean_size of foreground class '{name}' must be > 0, got {size}")
        return self

    @property
    def n_classes(self) -> int:
        return len(self.names)

    @property
    def foreground_ids(self) -> np.ndarray:
        return np.flatnonzero(~np.asarray(self.background, dtype=bool))

    @property
    def background_ids(self) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.background, dtype=bool))

    def is_background(self, class_ids: np.ndarray) -> np.ndarray:
        table = np.asarray(self.background, dtype=bool)
        return table[np.asarray(class_ids, dtype=np.int64)]

    def radius_for(self, class_id: int) -> float:
        return float(self.mean_size[class_id])

    def name_of(self, class_id: int) -> str:
        return self.names[class_id]
