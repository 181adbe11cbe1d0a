"""Independent re-checks of action programs: affordances, slots, containment legality.

This module deliberately shares no machinery with the scheduler in program.py.
It re-derives containment state from the action list alone, so a buggy generator
cannot validate its own output.
"""

from __future__ import annotations

from collections import defaultdict

from .actions import MIN_ACTION_SPAN, ROTATE_DEGREES, ActionInstance, ActionProgram
from .world import ActionType, Scene, SceneConfig, Shape, affordances

__all__ = ["ProgramValidationError", "validate_scene", "validate_program"]

_CONTAINABLE = (Shape.SPHERE, Shape.SNITCH, Shape.CONE)


class ProgramValidationError(ValueError):
    """An action program violates a structural or containment invariant."""


def validate_scene(scene: Scene, config: SceneConfig) -> None:
    """Check spawn invariants: composition, plane bounds, pairwise clearance."""
    n = len(scene)
    if not (config.n_objects_min <= n <= config.n_objects_max):
        raise ProgramValidationError(f"scene has {n} objects, outside configured range")
    snitches = [p for p in scene.objects if p.spec.shape is Shape.SNITCH]
    if len(snitches) != 1:
        raise ProgramValidationError(f"scene must have exactly one snitch, found {len(snitches)}")
    if not scene.cone_ids:
        raise ProgramValidationError("scene must contain at least one cone")
    he = config.plane_half_extent
    for p in scene.objects:
        limit = he - p.spec.radius
        if abs(p.x) > limit or abs(p.y) > limit:
            raise ProgramValidationError(
                f"object {p.spec.id} spawned outside the inset plane at ({p.x}, {p.y})"
            )
    objs = scene.objects
    for i in range(len(objs)):
        for j in range(i + 1, len(objs)):
            a, b = objs[i], objs[j]
            min_d = a.spec.radius + b.spec.radius
            if (a.x - b.x) ** 2 + (a.y - b.y) ** 2 < min_d**2:
                raise ProgramValidationError(
                    f"objects {a.spec.id} and {b.spec.id} overlap at spawn"
                )


def _check_static(program: ActionProgram) -> None:
    config = program.config
    scene = program.scene
    ids = set(scene.ids)
    he = config.plane_half_extent

    order_keys = [(a.slot, a.interval.start, a.actor_id) for a in program.actions]
    if order_keys != sorted(order_keys):
        raise ProgramValidationError("actions are not ordered by (slot, start, actor)")

    for a in program.actions:
        if a.actor_id not in ids:
            raise ProgramValidationError(f"unknown actor id {a.actor_id}")
        shape = scene.spec(a.actor_id).shape
        if a.action not in affordances(shape):
            raise ProgramValidationError(
                f"{shape.value} {a.actor_id} cannot perform {a.action.value}"
            )
        if not (0 <= a.slot < config.n_slots):
            raise ProgramValidationError(f"slot {a.slot} out of range")
        lo = a.slot * config.slot_len
        hi = lo + config.slot_len - 1
        iv = a.interval
        if iv.start < lo or iv.end > hi:
            raise ProgramValidationError(
                f"interval [{iv.start}, {iv.end}] escapes slot {a.slot} bounds [{lo}, {hi}]"
            )
        if iv.span < MIN_ACTION_SPAN:
            raise ProgramValidationError(f"interval span {iv.span} below minimum {MIN_ACTION_SPAN}")
        if iv.end >= config.frames:
            raise ProgramValidationError("interval extends past the episode")
        if a.action is ActionType.ROTATE:
            if a.start_pose.xy != a.end_pose.xy:
                raise ProgramValidationError("rotate must keep position fixed")
            if a.end_pose.theta - a.start_pose.theta != ROTATE_DEGREES:
                raise ProgramValidationError("rotate must turn by exactly one quarter turn")
        else:
            if a.end_pose.theta != a.start_pose.theta:
                raise ProgramValidationError("only rotate may change orientation")
            if abs(a.end_pose.x) > he or abs(a.end_pose.y) > he:
                raise ProgramValidationError("destination outside the plane")
        if a.action is ActionType.CONTAIN and a.target_id not in ids:
            raise ProgramValidationError(f"unknown contain target {a.target_id}")

    per_slot: dict[int, list[ActionInstance]] = defaultdict(list)
    for a in program.actions:
        per_slot[a.slot].append(a)
    k = config.k_for(len(scene))
    for slot, acts in per_slot.items():
        actors = [a.actor_id for a in acts]
        if len(set(actors)) != len(actors):
            raise ProgramValidationError(f"actor acts twice in slot {slot}")
        if len(actors) > k:
            raise ProgramValidationError(f"slot {slot} has {len(actors)} actors, budget is {k}")


def _check_chronology(program: ActionProgram) -> None:
    """Replay containment events at frame granularity and re-check legality."""
    scene = program.scene
    pos: dict[int, tuple[float, float]] = {p.spec.id: p.xy for p in scene.objects}
    theta: dict[int, float] = {p.spec.id: 0.0 for p in scene.objects}
    contained_by: dict[int, int] = {}
    intervals_of: dict[int, list] = defaultdict(list)
    for a in program.actions:
        intervals_of[a.actor_id].append(a.interval)

    def contents_of(container: int) -> list[int]:
        return [oid for oid, c in contained_by.items() if c == container]

    def stack_members(root: int) -> list[int]:
        out, frontier = [], [root]
        while frontier:
            nxt = []
            for c in frontier:
                inner = contents_of(c)
                out.extend(inner)
                nxt.extend(inner)
            frontier = nxt
        return out

    starts: dict[int, list[ActionInstance]] = defaultdict(list)
    landings: dict[int, list[ActionInstance]] = defaultdict(list)
    for a in program.actions:
        starts[a.interval.start].append(a)
        if a.action is ActionType.CONTAIN:
            landings[a.interval.end].append(a)

    for frame in sorted(set(starts) | set(landings)):
        # uncontain first: a lift that begins this frame reveals its contents now
        for a in sorted(starts[frame], key=lambda a: a.actor_id):
            if a.action is ActionType.PICK_PLACE:
                for oid in contents_of(a.actor_id):
                    del contained_by[oid]
        for a in sorted(starts[frame], key=lambda a: a.actor_id):
            if a.actor_id in contained_by:
                raise ProgramValidationError(
                    f"object {a.actor_id} acts at frame {frame} while contained"
                )
            holding = bool(contents_of(a.actor_id))
            if holding and a.action not in (ActionType.SLIDE, ActionType.PICK_PLACE):
                raise ProgramValidationError(
                    f"containing cone {a.actor_id} may only slide or pick-place"
                )
            if a.start_pose.xy != pos[a.actor_id]:
                raise ProgramValidationError(
                    f"action start pose of {a.actor_id} at frame {frame} breaks continuity"
                )
            if a.start_pose.theta != theta[a.actor_id]:
                raise ProgramValidationError(
                    f"action start orientation of {a.actor_id} breaks continuity"
                )
            pos[a.actor_id] = a.end_pose.xy
            theta[a.actor_id] = a.end_pose.theta
            if a.action is ActionType.SLIDE and holding:
                for oid in stack_members(a.actor_id):
                    pos[oid] = a.end_pose.xy
        for a in sorted(landings[frame], key=lambda a: a.actor_id):
            target = a.target_id
            tspec = scene.spec(target)
            aspec = scene.spec(a.actor_id)
            if tspec.shape not in _CONTAINABLE:
                raise ProgramValidationError(f"{tspec.shape.value} is not containable")
            if tspec.shape is Shape.CONE and tspec.radius >= aspec.radius:
                raise ProgramValidationError(
                    f"cone {a.actor_id} cannot contain equal-or-larger cone {target}"
                )
            if target in contained_by:
                raise ProgramValidationError(f"contain target {target} is already contained")
            for iv in intervals_of[target]:
                if iv.contains(frame):
                    raise ProgramValidationError(
                        f"contain target {target} is mid-action at landing frame {frame}"
                    )
            if pos[target] != a.end_pose.xy:
                raise ProgramValidationError(
                    f"contain landing of {a.actor_id} misses target {target} position"
                )
            contained_by[target] = a.actor_id
            # the new link must keep containment a forest
            walk = a.actor_id
            while walk in contained_by:
                walk = contained_by[walk]
                if walk == target:
                    raise ProgramValidationError("containment cycle detected")


def validate_program(program: ActionProgram) -> None:
    """Raise ProgramValidationError unless the program satisfies every invariant."""
    validate_scene(program.scene, program.config)
    _check_static(program)
    _check_chronology(program)
