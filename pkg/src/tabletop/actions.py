"""Action instances, frame intervals, and the per-episode action program."""

from __future__ import annotations

from dataclasses import dataclass, field

from .world import ActionType, Scene, SceneConfig

__all__ = [
    "MIN_ACTION_SPAN",
    "LIFT_HEIGHT",
    "ROTATE_DEGREES",
    "Interval",
    "Pose",
    "ActionInstance",
    "EpisodeSeed",
    "ActionProgram",
]

# Minimum frames between interval start and end; forbids degenerate motions.
MIN_ACTION_SPAN = 6

# Carry height of pick-place and contain, in plane units.
LIFT_HEIGHT = 2.0

# In-place turn per rotate action, about the vertical axis.
ROTATE_DEGREES = 90.0


@dataclass(frozen=True)
class Interval:
    """Inclusive frame interval [start, end]."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0:
            raise ValueError(f"interval start must be >= 0, got {self.start}")
        if self.end <= self.start:
            raise ValueError(f"interval end must exceed start, got [{self.start}, {self.end}]")

    @property
    def span(self) -> int:
        return self.end - self.start

    def contains(self, frame: int) -> bool:
        return self.start <= frame <= self.end


@dataclass(frozen=True)
class Pose:
    """Ground-plane pose: position plus orientation in degrees about the up axis."""

    x: float
    y: float
    theta: float = 0.0

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class ActionInstance:
    """One scheduled action by one actor within one slot."""

    actor_id: int
    action: ActionType
    slot: int
    interval: Interval
    start_pose: Pose
    end_pose: Pose
    target_id: int | None = None

    def __post_init__(self) -> None:
        if self.action is ActionType.CONTAIN:
            if self.target_id is None:
                raise ValueError("contain requires a target_id")
            if self.target_id == self.actor_id:
                raise ValueError("contain target must differ from actor")
        elif self.target_id is not None:
            raise ValueError(f"{self.action.value} takes no target")


@dataclass(frozen=True)
class EpisodeSeed:
    """Seed derivation record: (master_seed, index, attempt) identifies one episode."""

    master_seed: int
    index: int
    attempt: int = 0


@dataclass(frozen=True)
class ActionProgram:
    """A full episode program: spawned scene plus actions ordered by (slot, start, actor)."""

    scene: Scene
    actions: tuple[ActionInstance, ...]
    config: SceneConfig
    seed: EpisodeSeed | None = None

    def by_actor(self, actor_id: int) -> tuple[ActionInstance, ...]:
        return tuple(a for a in self.actions if a.actor_id == actor_id)

    def in_slot(self, slot: int) -> tuple[ActionInstance, ...]:
        return tuple(a for a in self.actions if a.slot == slot)
