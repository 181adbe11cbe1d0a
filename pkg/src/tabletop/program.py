"""Episode scheduling: per-slot action proposals with collision rejection."""

from __future__ import annotations

import numpy as np

from .actions import (
    MIN_ACTION_SPAN,
    ROTATE_DEGREES,
    ActionInstance,
    ActionProgram,
    EpisodeSeed,
    Interval,
    Pose,
)
from .simulate import airborne_frame, interpolate_pose, motion_samples
from .world import ActionType, Scene, SceneConfig, Shape, affordances

__all__ = [
    "PROPOSAL_ATTEMPTS",
    "SlotWorld",
    "collision_free",
    "propose_action",
    "schedule_episode",
]

# Fresh (action, parameters) draws per selected actor before the slot gives up
# on it. Calibrated against corpus-level class prevalence; see tests.
PROPOSAL_ATTEMPTS = 4

_CONE_HOLDING_ACTIONS = (ActionType.PICK_PLACE, ActionType.SLIDE)


class SlotWorld:
    """Ground-truth positions of every object over one slot, frame by frame.

    Accepted proposals are written into the table so later proposals in the same
    slot are checked against their swept paths, not just start-of-slot rest
    positions. Airborne carry frames are masked out of ground collision checks.
    """

    def __init__(
        self,
        scene: Scene,
        slot: int,
        config: SceneConfig,
        positions: dict[int, tuple[float, float]],
        orientations: dict[int, float],
        contained_by: dict[int, int],
    ) -> None:
        self.scene = scene
        self.slot = slot
        self.config = config
        self.t0 = slot * config.slot_len
        self.length = config.slot_len
        self.ids = sorted(positions)
        self._index = {oid: i for i, oid in enumerate(self.ids)}
        self._radii = np.array([scene.spec(oid).radius for oid in self.ids])
        self._start_xy = dict(positions)
        self.orientations = dict(orientations)
        self._start_links = dict(contained_by)
        self._xy = np.empty((len(self.ids), self.length, 2))
        for oid, i in self._index.items():
            self._xy[i, :, 0] = positions[oid][0]
            self._xy[i, :, 1] = positions[oid][1]
        self._air = np.zeros((len(self.ids), self.length), dtype=bool)
        self.accepted: list[ActionInstance] = []
        self.claimed_targets: set[int] = set()
        self._released: set[int] = set()
        self._new_links: dict[int, int] = {}

    # -- queries -------------------------------------------------------------

    def radius(self, oid: int) -> float:
        return float(self._radii[self._index[oid]])

    def start_position(self, oid: int) -> tuple[float, float]:
        return self._start_xy[oid]

    def position(self, oid: int, frame: int) -> tuple[float, float]:
        row = self._xy[self._index[oid], frame - self.t0]
        return (float(row[0]), float(row[1]))

    def is_contained(self, oid: int) -> bool:
        return oid in self._start_links

    def direct_contents(self, oid: int) -> list[int]:
        return [o for o, c in self._start_links.items() if c == oid]

    def stack_contents(self, oid: int) -> list[int]:
        out, frontier = [], [oid]
        while frontier:
            inner = [o for c in frontier for o in self.direct_contents(c)]
            out.extend(inner)
            frontier = inner
        return out

    def acting(self, oid: int) -> bool:
        return any(a.actor_id == oid for a in self.accepted)

    def contain_targets_for(self, actor_id: int) -> list[int]:
        """Objects the given cone could legally land on this slot."""
        r_actor = self.radius(actor_id)
        out = []
        for oid in self.ids:
            if oid == actor_id or oid in self.claimed_targets or oid in self._released:
                continue
            if self.is_contained(oid) or self.acting(oid):
                continue
            spec = self.scene.spec(oid)
            if spec.shape in (Shape.SPHERE, Shape.SNITCH):
                out.append(oid)
            elif spec.shape is Shape.CONE and spec.radius < r_actor:
                out.append(oid)
        return out

    # -- updates -------------------------------------------------------------

    def apply(self, action: ActionInstance) -> None:
        """Commit an accepted proposal into the position table."""
        i = self._index[action.actor_id]
        f0 = action.interval.start - self.t0
        f1 = action.interval.end - self.t0
        for t in range(action.interval.start, action.interval.end + 1):
            p = interpolate_pose(action, t)
            self._xy[i, t - self.t0] = (p.x, p.y)
            if airborne_frame(action, t):
                self._air[i, t - self.t0] = True
        self._xy[i, f1 + 1 :] = (action.end_pose.x, action.end_pose.y)
        self.orientations[action.actor_id] = action.end_pose.theta

        if action.action is ActionType.SLIDE:
            for oid in self.stack_contents(action.actor_id):
                self._xy[self._index[oid], f0:] = self._xy[i, f0:]
        elif action.action is ActionType.CONTAIN:
            self.claimed_targets.add(action.target_id)
            self._new_links[action.target_id] = action.actor_id
        elif action.action is ActionType.PICK_PLACE:
            for oid in self.direct_contents(action.actor_id):
                self._released.add(oid)
        self.accepted.append(action)

    def finalize(self) -> tuple[dict[int, tuple[float, float]], dict[int, int]]:
        """End-of-slot rest positions and updated containment links."""
        positions = {
            oid: (float(self._xy[i, -1, 0]), float(self._xy[i, -1, 1]))
            for oid, i in self._index.items()
        }
        links = {
            oid: c for oid, c in self._start_links.items() if oid not in self._released
        }
        links.update(self._new_links)
        return positions, links


def collision_free(
    samples: list[tuple[int, float, float, bool]],
    radius: float,
    world: SlotWorld,
    *,
    ignore: frozenset[int] | set[int] = frozenset(),
) -> bool:
    """Check a swept path (per-frame samples) against every other object.

    Airborne sample frames are exempt, as are frames where the obstacle itself
    is airborne. `ignore` lists object ids excluded from the check (the actor,
    and for contain the target stack).
    """
    ground = [(t, x, y) for t, x, y, air in samples if not air]
    if not ground:
        return True
    frames = np.array([t - world.t0 for t, _, _ in ground])
    pts = np.array([(x, y) for _, x, y in ground])
    others = [i for oid, i in world._index.items() if oid not in ignore]
    if not others:
        return True
    obs_xy = world._xy[others][:, frames]          # (k, m, 2)
    obs_air = world._air[others][:, frames]        # (k, m)
    d2 = ((obs_xy - pts[None, :, :]) ** 2).sum(axis=2)
    thr = (world._radii[others][:, None] + radius) ** 2
    return not np.any((d2 < thr) & ~obs_air)


def _sample_interval(slot: int, config: SceneConfig, rng: np.random.Generator) -> Interval:
    lo = slot * config.slot_len
    hi = lo + config.slot_len - 1
    start = int(rng.integers(lo, hi - MIN_ACTION_SPAN, endpoint=True))
    end = int(rng.integers(start + MIN_ACTION_SPAN, hi, endpoint=True))
    return Interval(start, end)


def propose_action(
    actor_id: int,
    slot: int,
    world: SlotWorld,
    rng: np.random.Generator,
    *,
    allowed: frozenset[ActionType] | None = None,
    attempts: int = PROPOSAL_ATTEMPTS,
) -> ActionInstance | None:
    """Draw a collision-free action for one actor, or None if every draw fails.

    A cone that currently contains something may only slide or pick-place away.
    Contain lands exactly on an idle target's position.
    """
    config = world.config
    scene = world.scene
    shape = scene.spec(actor_id).shape
    if allowed is None:
        if shape is Shape.CONE and world.direct_contents(actor_id):
            allowed = frozenset(_CONE_HOLDING_ACTIONS)
        else:
            allowed = affordances(shape)
    candidates = sorted(allowed, key=lambda a: a.value)
    if not candidates:
        return None
    x0, y0 = world.start_position(actor_id)
    theta0 = world.orientations[actor_id]
    he = config.plane_half_extent
    radius = world.radius(actor_id)

    for _ in range(attempts):
        act = candidates[int(rng.integers(len(candidates)))]
        interval = _sample_interval(slot, config, rng)
        target: int | None = None
        ignore: set[int] = {actor_id}
        if act is ActionType.ROTATE:
            end = Pose(x0, y0, theta0 + ROTATE_DEGREES)
        elif act is ActionType.CONTAIN:
            eligible = world.contain_targets_for(actor_id)
            if not eligible:
                continue
            target = eligible[int(rng.integers(len(eligible)))]
            tx, ty = world.start_position(target)
            end = Pose(tx, ty, theta0)
            # landing on the target stack is the point of the action
            ignore.add(target)
            ignore.update(world.stack_contents(target))
        else:
            end = Pose(float(rng.uniform(-he, he)), float(rng.uniform(-he, he)), theta0)
        candidate = ActionInstance(
            actor_id=actor_id,
            action=act,
            slot=slot,
            interval=interval,
            start_pose=Pose(x0, y0, theta0),
            end_pose=end,
            target_id=target,
        )
        samples = motion_samples(candidate)
        # the actor parks at its destination for the rest of the slot, and an
        # already-accepted mover may sweep past later; check the parked tail too
        slot_end = world.t0 + world.length - 1
        samples += [(t, end.x, end.y, False) for t in range(interval.end + 1, slot_end + 1)]
        contents = world.stack_contents(actor_id)
        if act is ActionType.SLIDE and contents:
            # the stack is co-located with the actor and dragged along; the
            # actor's own disc stands in for it
            ok = collision_free(samples, radius, world, ignore=ignore | set(contents))
        elif act is ActionType.PICK_PLACE and contents:
            # lifting off the stack is legal, but the descent elsewhere must
            # still clear the objects left behind
            span = candidate.interval.span
            lift = [s for s in samples if 3 * (s[0] - interval.start) <= span]
            rest = [s for s in samples if 3 * (s[0] - interval.start) > span]
            ok = collision_free(lift, radius, world, ignore=ignore | set(contents)) and (
                collision_free(rest, radius, world, ignore=ignore)
            )
        else:
            ok = collision_free(samples, radius, world, ignore=ignore)
        if ok:
            return candidate
    return None


def schedule_episode(
    scene: Scene,
    config: SceneConfig,
    rng: np.random.Generator,
    *,
    seed: EpisodeSeed | None = None,
) -> ActionProgram:
    """Schedule every slot of an episode over a spawned scene.

    Each slot shuffles the objects, selects the first K that are free to act
    (contained objects and freshly claimed contain targets are skipped), and
    gives each one proposal. Failed proposals leave the slot with fewer actions.
    """
    ids = list(scene.ids)
    positions = {p.spec.id: p.xy for p in scene.objects}
    orientations = {oid: 0.0 for oid in ids}
    links: dict[int, int] = {}
    actions: list[ActionInstance] = []

    for slot in range(config.n_slots):
        world = SlotWorld(scene, slot, config, positions, orientations, links)
        order = [ids[j] for j in rng.permutation(len(ids))]
        budget = config.k_for(len(ids))
        attempted = 0
        for oid in order:
            if attempted >= budget:
                break
            if world.is_contained(oid) or oid in world.claimed_targets:
                continue
            attempted += 1
            proposal = propose_action(oid, slot, world, rng)
            if proposal is not None:
                world.apply(proposal)
                actions.append(proposal)
        positions, links = world.finalize()
        orientations = dict(world.orientations)

    actions.sort(key=lambda a: (a.slot, a.interval.start, a.actor_id))
    return ActionProgram(scene=scene, actions=tuple(actions), config=config, seed=seed)
