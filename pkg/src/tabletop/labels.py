"""Ground-truth label derivation: action classes, pair relations, snitch cell."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cache
from typing import TYPE_CHECKING

import numpy as np

from .actions import ActionProgram, Interval
from .world import ActionType, Shape, affordances

if TYPE_CHECKING:
    from .simulate import EpisodeTimeline

__all__ = [
    "QUANTIZE_TOL",
    "AtomicClass",
    "BroadRelation",
    "CompositeClass",
    "LabelRecord",
    "atomic_vocab",
    "atomic_index",
    "composite_vocab",
    "composite_index",
    "broad_relation",
    "canonical_composite",
    "derive_task1",
    "derive_task2",
    "derive_task3",
    "quantize",
    "cell_rc",
    "make_label_record",
]

# Points at most this far outside the plane are clamped into the border cells.
QUANTIZE_TOL = 1e-9

DEFAULT_GRIDS = (4, 6, 8)


@dataclass(frozen=True)
class AtomicClass:
    """A (shape, action) pair from the affordance table."""

    shape: Shape
    action: ActionType

    @property
    def name(self) -> str:
        return f"{self.action.value}({self.shape.value})"


class BroadRelation(Enum):
    BEFORE = "before"
    DURING = "during"
    AFTER = "after"


@dataclass(frozen=True)
class CompositeClass:
    """An ordered pair of atomic classes joined by a canonical relation."""

    first: AtomicClass
    relation: BroadRelation
    second: AtomicClass

    @property
    def name(self) -> str:
        return f"{self.first.name} {self.relation.value} {self.second.name}"


_SHAPE_ORDER = {s: i for i, s in enumerate(Shape)}
_ACTION_ORDER = {a: i for i, a in enumerate(ActionType)}


@cache
def atomic_vocab() -> tuple[AtomicClass, ...]:
    """All afforded (shape, action) pairs, ordered by shape then action."""
    out = []
    for shape in Shape:
        for action in sorted(affordances(shape), key=_ACTION_ORDER.get):
            out.append(AtomicClass(shape, action))
    return tuple(out)


@cache
def atomic_index() -> dict[AtomicClass, int]:
    return {c: i for i, c in enumerate(atomic_vocab())}


@cache
def composite_vocab() -> tuple[CompositeClass, ...]:
    """Canonical pair classes: every ordered before-pair, every unordered during-pair."""
    atoms = atomic_vocab()
    out = []
    for a in atoms:
        for b in atoms:
            out.append(CompositeClass(a, BroadRelation.BEFORE, b))
    for i, a in enumerate(atoms):
        for b in atoms[i:]:
            out.append(CompositeClass(a, BroadRelation.DURING, b))
    return tuple(out)


@cache
def composite_index() -> dict[CompositeClass, int]:
    return {c: i for i, c in enumerate(composite_vocab())}


def broad_relation(a: Interval, b: Interval) -> BroadRelation:
    """Three-way grouping of interval relations; touching endpoints count as before."""
    if a.end <= b.start:
        return BroadRelation.BEFORE
    if b.end <= a.start:
        return BroadRelation.AFTER
    return BroadRelation.DURING


def canonical_composite(
    a: AtomicClass, relation: BroadRelation, b: AtomicClass
) -> CompositeClass:
    """Collapse converse and symmetric forms onto the stored vocabulary entry."""
    if relation is BroadRelation.AFTER:
        return CompositeClass(b, BroadRelation.BEFORE, a)
    if relation is BroadRelation.DURING:
        ai, bi = atomic_index()[a], atomic_index()[b]
        if ai <= bi:
            return CompositeClass(a, BroadRelation.DURING, b)
        return CompositeClass(b, BroadRelation.DURING, a)
    return CompositeClass(a, BroadRelation.BEFORE, b)


def _atomic_of(program: ActionProgram, action_index: int) -> AtomicClass:
    act = program.actions[action_index]
    return AtomicClass(program.scene.spec(act.actor_id).shape, act.action)


def derive_task1(program: ActionProgram) -> np.ndarray:
    """Multi-hot vector over the atomic vocabulary."""
    index = atomic_index()
    out = np.zeros(len(index), dtype=np.int8)
    for act in program.actions:
        shape = program.scene.spec(act.actor_id).shape
        out[index[AtomicClass(shape, act.action)]] = 1
    return out


@cache
def _pair_bit_table() -> np.ndarray:
    """(first, second, relation) -> composite vocabulary index, relations coded 0/1/2."""
    atoms = atomic_vocab()
    idx = composite_index()
    rels = (BroadRelation.BEFORE, BroadRelation.DURING, BroadRelation.AFTER)
    table = np.empty((len(atoms), len(atoms), 3), dtype=np.int64)
    for i, a in enumerate(atoms):
        for j, b in enumerate(atoms):
            for r, rel in enumerate(rels):
                table[i, j, r] = idx[canonical_composite(a, rel, b)]
    return table


def derive_task2(program: ActionProgram) -> np.ndarray:
    """Multi-hot vector over the composite vocabulary, from all ordered action pairs."""
    out = np.zeros(len(composite_vocab()), dtype=np.int8)
    acts = program.actions
    n = len(acts)
    if n < 2:
        return out
    table = _pair_bit_table()
    aidx = atomic_index()
    cls = np.array([aidx[_atomic_of(program, i)] for i in range(n)])
    starts = np.array([a.interval.start for a in acts])
    ends = np.array([a.interval.end for a in acts])
    others = np.ones(n, dtype=bool)
    for i in range(n):
        rel = np.ones(n, dtype=np.int64)  # during unless ordered
        rel[ends[i] <= starts] = 0
        rel[ends <= starts[i]] = 2
        others[i] = False
        out[table[cls[i], cls[others], rel[others]]] = 1
        others[i] = True
    return out


def quantize(
    point: tuple[float, float],
    grid: int,
    half_extent: float = 3.0,
    *,
    tol: float = QUANTIZE_TOL,
) -> int:
    """Row-major grid cell of a plane point; border cells are closed outward.

    Cells are half open along each axis except the last, so the far edge of the
    plane still maps to a valid cell. Points further than `tol` outside the
    plane are rejected.
    """
    x, y = point
    if not (-half_extent - tol <= x <= half_extent + tol) or not (
        -half_extent - tol <= y <= half_extent + tol
    ):
        raise ValueError(f"point ({x}, {y}) outside the plane beyond tolerance")
    width = 2.0 * half_extent / grid

    def axis(v: float) -> int:
        k = min(max(int((v + half_extent) // width), 0), grid - 1)
        # the shifted floor division can land one cell off when v sits within
        # an ulp of an edge; settle against the true edges
        if v < -half_extent + k * width:
            k -= 1
        elif v >= -half_extent + (k + 1) * width and k < grid - 1:
            k += 1
        return min(max(k, 0), grid - 1)

    return axis(y) * grid + axis(x)


def cell_rc(cell: int, grid: int) -> tuple[int, int]:
    """Row and column of a row-major cell index."""
    if not (0 <= cell < grid * grid):
        raise ValueError(f"cell {cell} outside grid {grid}")
    return divmod(cell, grid)


def derive_task3(timeline: "EpisodeTimeline", grid: int) -> int:
    """Quantized snitch cell at the final frame."""
    return quantize(
        timeline.snitch_track[-1], grid, timeline.config.plane_half_extent
    )


@dataclass(frozen=True)
class LabelRecord:
    """Ground-truth labels for one episode; multi-hots stored as set-bit indices."""

    episode_id: str
    task1: tuple[int, ...]
    task2: tuple[int, ...]
    task3: dict[int, int]  # grid resolution -> cell index
    grid_resolution: int

    def task1_vector(self) -> np.ndarray:
        out = np.zeros(len(atomic_vocab()), dtype=np.int8)
        out[list(self.task1)] = 1
        return out

    def task2_vector(self) -> np.ndarray:
        out = np.zeros(len(composite_vocab()), dtype=np.int8)
        out[list(self.task2)] = 1
        return out

    def task3_cell(self, grid: int | None = None) -> int:
        return self.task3[self.grid_resolution if grid is None else grid]


def make_label_record(
    episode_id: str,
    program: ActionProgram,
    timeline: "EpisodeTimeline",
    grids: tuple[int, ...] = DEFAULT_GRIDS,
) -> LabelRecord:
    """Derive all three task labels for one replayed episode."""
    t1 = tuple(int(i) for i in np.flatnonzero(derive_task1(program)))
    t2 = tuple(int(i) for i in np.flatnonzero(derive_task2(program)))
    t3 = {g: derive_task3(timeline, g) for g in grids}
    return LabelRecord(
        episode_id=episode_id,
        task1=t1,
        task2=t2,
        task3=t3,
        grid_resolution=program.config.grid_resolution,
    )
