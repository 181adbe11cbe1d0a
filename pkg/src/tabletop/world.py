"""Object universe: shapes, sizes, materials, affordances, and scene spawning."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "Shape",
    "Size",
    "Material",
    "ActionType",
    "CameraMode",
    "COLORS",
    "SNITCH_COLOR",
    "ObjectSpec",
    "PlacedObject",
    "Scene",
    "SceneConfig",
    "PlacementError",
    "affordances",
    "footprint_radius",
    "snitch_spec",
    "spawn_scene",
]


class Shape(Enum):
    CUBE = "cube"
    SPHERE = "sphere"
    CYLINDER = "cylinder"
    CONE = "cone"
    SNITCH = "snitch"


class Size(Enum):
    SMALL = "small"
    MEDIUM = "medium"
    LARGE = "large"


class Material(Enum):
    RUBBER = "rubber"
    METAL = "metal"


class ActionType(Enum):
    ROTATE = "rotate"
    PICK_PLACE = "pick_place"
    SLIDE = "slide"
    CONTAIN = "contain"


class CameraMode(Enum):
    STATIC = "static"
    MOVING = "moving"


COLORS = ("blue", "brown", "cyan", "gray", "green", "purple", "red", "yellow")

# The snitch has one fixed appearance, distinct from the regular palette.
SNITCH_COLOR = "gold"

_RADII = {Size.SMALL: 0.35, Size.MEDIUM: 0.525, Size.LARGE: 0.70}

_AFFORDANCES = {
    Shape.CUBE: frozenset({ActionType.ROTATE, ActionType.PICK_PLACE, ActionType.SLIDE}),
    Shape.SPHERE: frozenset({ActionType.PICK_PLACE, ActionType.SLIDE}),
    Shape.CYLINDER: frozenset({ActionType.ROTATE, ActionType.PICK_PLACE, ActionType.SLIDE}),
    Shape.CONE: frozenset({ActionType.PICK_PLACE, ActionType.SLIDE, ActionType.CONTAIN}),
    Shape.SNITCH: frozenset({ActionType.ROTATE, ActionType.PICK_PLACE, ActionType.SLIDE}),
}

# Shapes eligible for the "random extras" beyond the guaranteed snitch and cone.
_SPAWN_SHAPES = (Shape.CUBE, Shape.SPHERE, Shape.CYLINDER, Shape.CONE)
_SIZES = tuple(Size)
_MATERIALS = tuple(Material)

MAX_PLACE_ATTEMPTS = 1000


def affordances(shape: Shape) -> frozenset[ActionType]:
    """Action types the given shape can perform."""
    return _AFFORDANCES[shape]


def footprint_radius(shape: Shape, size: Size) -> float:
    """Collision-disc radius on the ground plane, in plane units."""
    del shape  # radius depends only on size; shape kept for the call contract
    return _RADII[size]


@dataclass(frozen=True)
class ObjectSpec:
    """Immutable identity of one object."""

    id: int
    shape: Shape
    size: Size
    color: str
    material: Material

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError(f"object id must be >= 0, got {self.id}")
        if self.shape is Shape.SNITCH:
            if (self.size, self.color, self.material) != (Size.MEDIUM, SNITCH_COLOR, Material.METAL):
                raise ValueError("snitch appearance is fixed: medium, gold, metal")
        elif self.color not in COLORS:
            raise ValueError(f"unknown color {self.color!r}")

    @property
    def radius(self) -> float:
        return footprint_radius(self.shape, self.size)


def snitch_spec(object_id: int = 0) -> ObjectSpec:
    """The unique per-scene snitch: a fixed medium gold metal object."""
    return ObjectSpec(object_id, Shape.SNITCH, Size.MEDIUM, SNITCH_COLOR, Material.METAL)


@dataclass(frozen=True)
class PlacedObject:
    """An object spec with its spawn position on the plane."""

    spec: ObjectSpec
    x: float
    y: float

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Scene:
    """A spawned scene: specs plus initial positions, keyed by object id."""

    objects: tuple[PlacedObject, ...]

    def __post_init__(self) -> None:
        ids = [p.spec.id for p in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate object ids in scene")

    def __len__(self) -> int:
        return len(self.objects)

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(sorted(p.spec.id for p in self.objects))

    def placed(self, object_id: int) -> PlacedObject:
        for p in self.objects:
            if p.spec.id == object_id:
                return p
        raise KeyError(object_id)

    def spec(self, object_id: int) -> ObjectSpec:
        return self.placed(object_id).spec

    @property
    def snitch_id(self) -> int:
        for p in self.objects:
            if p.spec.shape is Shape.SNITCH:
                return p.spec.id
        raise ValueError("scene has no snitch")

    @property
    def cone_ids(self) -> tuple[int, ...]:
        return tuple(p.spec.id for p in self.objects if p.spec.shape is Shape.CONE)


@dataclass(frozen=True)
class SceneConfig:
    """Per-corpus generation parameters. k_per_slot=None means every object acts."""

    n_objects_min: int = 5
    n_objects_max: int = 10
    k_per_slot: int | None = 2
    frames: int = 300
    slot_len: int = 30
    fps: int = 24
    plane_half_extent: float = 3.0
    grid_resolution: int = 6
    camera_mode: CameraMode = CameraMode.STATIC

    def __post_init__(self) -> None:
        if self.n_objects_min < 2:
            raise ValueError("need at least two objects (snitch plus a cone)")
        if self.n_objects_max < self.n_objects_min:
            raise ValueError("n_objects_max < n_objects_min")
        if self.k_per_slot is not None and self.k_per_slot < 1:
            raise ValueError("k_per_slot must be >= 1 or None")
        if self.frames <= 0 or self.slot_len <= 0:
            raise ValueError("frames and slot_len must be positive")
        if self.frames % self.slot_len != 0:
            raise ValueError("frames must divide evenly into slots")
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if self.plane_half_extent <= 0:
            raise ValueError("plane_half_extent must be positive")
        if self.grid_resolution < 1:
            raise ValueError("grid_resolution must be >= 1")
        # largest footprint must actually fit inside the plane
        if self.plane_half_extent <= max(_RADII.values()):
            raise ValueError("plane too small for the largest footprint")

    @property
    def n_slots(self) -> int:
        return self.frames // self.slot_len

    def k_for(self, n_objects: int) -> int:
        """Actor budget for one slot in a scene of n_objects."""
        if self.k_per_slot is None:
            return n_objects
        return min(self.k_per_slot, n_objects)


class PlacementError(RuntimeError):
    """Raised when rejection sampling cannot place an object without overlap."""


def _draw(rng: np.random.Generator, options: tuple) -> object:
    return options[int(rng.integers(len(options)))]


def _random_spec(object_id: int, shape: Shape, rng: np.random.Generator) -> ObjectSpec:
    size = _draw(rng, _SIZES)
    color = _draw(rng, COLORS)
    material = _draw(rng, _MATERIALS)
    return ObjectSpec(object_id, shape, size, color, material)


def spawn_scene(config: SceneConfig, rng: np.random.Generator) -> Scene:
    """Spawn N objects (one snitch, at least one cone) at non-overlapping positions.

    Centers are sampled uniformly over the plane inset by each object's footprint
    radius. Raises PlacementError if an object cannot be placed after
    MAX_PLACE_ATTEMPTS rejections.
    """
    n = int(rng.integers(config.n_objects_min, config.n_objects_max, endpoint=True))
    specs = [snitch_spec(0), _random_spec(1, Shape.CONE, rng)]
    for object_id in range(2, n):
        shape = _draw(rng, _SPAWN_SHAPES)
        specs.append(_random_spec(object_id, shape, rng))

    placed: list[PlacedObject] = []
    for spec in specs:
        limit = config.plane_half_extent - spec.radius
        for _ in range(MAX_PLACE_ATTEMPTS):
            x = float(rng.uniform(-limit, limit))
            y = float(rng.uniform(-limit, limit))
            if all(
                (x - p.x) ** 2 + (y - p.y) ** 2 >= (spec.radius + p.spec.radius) ** 2
                for p in placed
            ):
                placed.append(PlacedObject(spec, x, y))
                break
        else:
            raise PlacementError(
                f"could not place object {spec.id} ({spec.shape.value}) "
                f"after {MAX_PLACE_ATTEMPTS} attempts"
            )
    return Scene(tuple(placed))
