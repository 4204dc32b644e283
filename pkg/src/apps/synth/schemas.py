"""
Scene and noise configuration (loaded from JSON config files).
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.common.types import NoiseKind, Primitive


class ClassSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    primitive: Primitive
    # nominal (width, depth, height) in meters
    size: tuple[float, float, float]
    # relative uniform jitter applied to every dimension
    size_jitter: float = Field(default=0.1, ge=0.0, lt=1.0)

    @model_validator(mode="after")
    def _check_size(self) -> "ClassSpec":
        if min(self.size) <= 0:
            raise ValueError(f"size of class '{self.name}' must be positive, got {self.size}")
        return self


DEFAULT_CLASSES: tuple[ClassSpec, ...] = (
    ClassSpec(name="chair", primitive=Primitive.L_SHAPE, size=(0.5, 0.5, 0.9)),
    ClassSpec(name="table", primitive=Primitive.BOX, size=(1.2, 0.8, 0.75)),
    ClassSpec(name="cabinet", primitive=Primitive.BOX, size=(0.6, 0.5, 1.2)),
    ClassSpec(name="trash_bin", primitive=Primitive.CYLINDER, size=(0.4, 0.4, 0.5)),
    ClassSpec(name="lamp", primitive=Primitive.SPHERE, size=(0.5, 0.5, 0.5)),
)


class SceneConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_objects: int = Field(default=8, ge=1)
    classes: tuple[ClassSpec, ...] = DEFAULT_CLASSES
    # relative draw weight per class name; missing names weigh 0, None = uniform
    class_mix: dict[str, float] | None = None
    # points per square meter of object surface
    surface_density: float = Field(default=1500.0, gt=0)
    min_points_per_instance: int = Field(default=60, ge=1)
    # chance that an object is placed in contact with a new same-class twin
    adjacency_probability: float = Field(default=0.0, ge=0.0, le=1.0)
    # footprint gap between twins; <= 0 means touching or interpenetrating
    adjacency_gap: float = 0.0
    # restrict twins to these class names (None = any class)
    adjacency_classes: tuple[str, ...] | None = None
    room_extent: tuple[float, float] = (8.0, 8.0)
    # clearance between footprints of objects that are not twins
    min_separation: float = Field(default=0.3, ge=0.0)
    floor: bool = True
    floor_density: float = Field(default=150.0, ge=0)
    max_retries: int = Field(default=200, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _check_classes(self) -> "SceneConfig":
        names = [c.name for c in self.classes]
        if not names:
            raise ValueError("scene needs at least one object class")
        if len(set(names)) != len(names):
            raise ValueError("class names must be unique")
        if "floor" in names:
            raise ValueError("'floor' is reserved for the background class")
        for label, subset in (("class_mix", self.class_mix), ("adjacency_classes", self.adjacency_classes)):
            unknown = set(subset or ()) - set(names)
            if unknown:
                raise ValueError(f"{label} names unknown classes: {sorted(unknown)}")
        if self.class_mix is not None:
            if any(w < 0 for w in self.class_mix.values()) or not sum(self.class_mix.values()) > 0:
                raise ValueError("class_mix weights must be >= 0 with a positive total")
        if min(self.room_extent) <= 0:
            raise ValueError("room_extent must be positive")
        return self


class NoiseModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: NoiseKind = NoiseKind.GAUSSIAN
    sigma: float = Field(default=0.0, ge=0.0)
    # 0..1, fraction of the way boundary points are pulled toward the contact
    boundary_pull: float = Field(default=0.0, ge=0.0, le=1.0)
    # distance to the neighboring instance below which a point counts as boundary
    pull_band: float = Field(default=0.5, gt=0.0)
    semantic_error_rate: float = Field(default=0.0, ge=0.0, le=1.0)
    # degrees of freedom of the Student-t draws (heavy_tail)
    tail_dof: float = Field(default=3.0, gt=0.0)
    seed: int = 0

    @property
    def is_exact(self) -> bool:
        return self.sigma == 0.0 and self.boundary_pull == 0.0 and self.semantic_error_rate == 0.0
