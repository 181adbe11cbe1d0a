"""Per-frame replay of action programs: pose interpolation and containment motion."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple

from .actions import LIFT_HEIGHT, ActionInstance, ActionProgram
from .validate import validate_program
from .world import ActionType, Scene, SceneConfig

if TYPE_CHECKING:
    from .camera import CameraSchedule

__all__ = [
    "PoseAt",
    "ObjectState",
    "EpisodeTimeline",
    "EpisodeAttributes",
    "interpolate_pose",
    "airborne_frame",
    "motion_samples",
    "replay",
    "containment_stack",
    "episode_attributes",
]


class PoseAt(NamedTuple):
    """Instantaneous pose sampled from an action at one frame."""

    x: float
    y: float
    z: float
    theta: float


def _lerp(a: float, b: float, u: float) -> float:
    # (1-u)*a + u*b reproduces both endpoints exactly, which bit-exact replay needs
    return (1.0 - u) * a + u * b


def interpolate_pose(action: ActionInstance, frame: int) -> PoseAt:
    """Pose of the actor at an integer frame inside the action's interval.

    Slide moves linearly on the ground. Rotate turns in place. Pick-place and
    contain run three equal phases: vertical lift, horizontal carry at
    LIFT_HEIGHT, vertical descent.
    """
    iv = action.interval
    if not iv.contains(frame):
        raise ValueError(f"frame {frame} outside interval [{iv.start}, {iv.end}]")
    u = (frame - iv.start) / iv.span
    s, e = action.start_pose, action.end_pose
    if action.action is ActionType.SLIDE:
        return PoseAt(_lerp(s.x, e.x, u), _lerp(s.y, e.y, u), 0.0, s.theta)
    if action.action is ActionType.ROTATE:
        return PoseAt(s.x, s.y, 0.0, _lerp(s.theta, e.theta, u))
    # pick_place / contain
    if u <= 1.0 / 3.0:
        return PoseAt(s.x, s.y, _lerp(0.0, LIFT_HEIGHT, 3.0 * u), s.theta)
    if u <= 2.0 / 3.0:
        v = 3.0 * u - 1.0
        return PoseAt(_lerp(s.x, e.x, v), _lerp(s.y, e.y, v), LIFT_HEIGHT, s.theta)
    return PoseAt(e.x, e.y, _lerp(LIFT_HEIGHT, 0.0, 3.0 * u - 2.0), s.theta)


def airborne_frame(action: ActionInstance, frame: int) -> bool:
    """True during the carry phase of pick-place and contain (strict middle third)."""
    if action.action not in (ActionType.PICK_PLACE, ActionType.CONTAIN):
        return False
    rel = 3 * (frame - action.interval.start)
    return action.interval.span < rel < 2 * action.interval.span


def motion_samples(action: ActionInstance) -> list[tuple[int, float, float, bool]]:
    """Per-frame (frame, x, y, airborne) samples over the whole interval."""
    out = []
    for t in range(action.interval.start, action.interval.end + 1):
        p = interpolate_pose(action, t)
        out.append((t, p.x, p.y, airborne_frame(action, t)))
    return out


@dataclass(frozen=True)
class ObjectState:
    """Pose and containment link of one object at one frame."""

    x: float
    y: float
    z: float
    theta: float
    contained_by: int | None = None

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass
class EpisodeTimeline:
    """Replayed episode: per-frame object states plus the snitch track."""

    frames: list[dict[int, ObjectState]]
    snitch_track: tuple[tuple[float, float], ...]
    scene: Scene
    config: SceneConfig
    camera: "CameraSchedule | None" = None

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @property
    def final_snitch_xy(self) -> tuple[float, float]:
        return self.snitch_track[-1]


def replay(program: ActionProgram, camera: "CameraSchedule | None" = None) -> EpisodeTimeline:
    """Incrementally replay a validated program into per-frame object states.

    Containment becomes active at the landing frame of a contain and ends at the
    lift frame of the containing cone's pick-place. Contained objects copy their
    container's ground position bit for bit.
    """
    validate_program(program)
    scene = program.scene
    ids = list(scene.ids)

    starting: dict[int, list[ActionInstance]] = defaultdict(list)
    landing: dict[int, list[ActionInstance]] = defaultdict(list)
    for a in program.actions:
        starting[a.interval.start].append(a)
        if a.action is ActionType.CONTAIN:
            landing[a.interval.end].append(a)

    links: dict[int, int] = {}
    rest: dict[int, tuple[float, float, float]] = {
        p.spec.id: (p.x, p.y, 0.0) for p in scene.objects
    }
    active: dict[int, ActionInstance] = {}
    snitch_id = scene.snitch_id
    frames_out: list[dict[int, ObjectState]] = []
    track: list[tuple[float, float]] = []

    for t in range(program.config.frames):
        for a in starting.get(t, ()):
            if a.action is ActionType.PICK_PLACE:
                freed = [oid for oid, c in links.items() if c == a.actor_id]
                for oid in freed:
                    del links[oid]
            active[a.actor_id] = a
        # landings take effect at this frame, so the link is visible immediately
        for a in landing.get(t, ()):
            links[a.target_id] = a.actor_id

        states: dict[int, ObjectState] = {}

        def resolve(oid: int) -> ObjectState:
            st = states.get(oid)
            if st is not None:
                return st
            act = active.get(oid)
            if act is not None:
                p = interpolate_pose(act, t)
                st = ObjectState(p.x, p.y, p.z, p.theta, None)
            elif oid in links:
                container = resolve(links[oid])
                st = ObjectState(container.x, container.y, 0.0, rest[oid][2], links[oid])
            else:
                rx, ry, rtheta = rest[oid]
                st = ObjectState(rx, ry, 0.0, rtheta, None)
            states[oid] = st
            return st

        for oid in ids:
            resolve(oid)
        for oid in ids:
            st = states[oid]
            rest[oid] = (st.x, st.y, st.theta)
        for oid in [k for k, a in active.items() if a.interval.end == t]:
            del active[oid]

        frames_out.append(states)
        snitch = states[snitch_id]
        track.append((snitch.x, snitch.y))

    return EpisodeTimeline(
        frames=frames_out,
        snitch_track=tuple(track),
        scene=scene,
        config=program.config,
        camera=camera,
    )


def containment_stack(timeline: EpisodeTimeline, object_id: int, frame: int) -> list[int]:
    """Containers of an object at a frame, innermost first."""
    states = timeline.frames[frame]
    out: list[int] = []
    current = states[object_id].contained_by
    while current is not None:
        out.append(current)
        current = states[current].contained_by
    return out


@dataclass(frozen=True)
class EpisodeAttributes:
    """Per-episode quantities used to slice evaluation results."""

    last_move_frame: int
    contained_at_end: bool
    containment_depth: int
    displacement_cells: int
    n_objects: int


def episode_attributes(timeline: EpisodeTimeline) -> EpisodeAttributes:
    """Derive diagnostic attributes from a replayed timeline."""
    from .labels import cell_rc, quantize

    track = timeline.snitch_track
    last_move = 0
    for t in range(1, len(track)):
        if track[t] != track[t - 1]:
            last_move = t
    stack = containment_stack(timeline, timeline.scene.snitch_id, timeline.n_frames - 1)
    grid = timeline.config.grid_resolution
    he = timeline.config.plane_half_extent
    r0, c0 = cell_rc(quantize(track[0], grid, he), grid)
    r1, c1 = cell_rc(quantize(track[-1], grid, he), grid)
    return EpisodeAttributes(
        last_move_frame=last_move,
        contained_at_end=bool(stack),
        containment_depth=len(stack),
        displacement_cells=abs(r1 - r0) + abs(c1 - c0),
        n_objects=len(timeline.scene),
    )
