"""File formats: episode metadata, label and prediction lines, split manifests.

All writers are byte-deterministic (sorted keys, fixed separators, repr floats),
so corpus content hashes are stable across runs and worker counts.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .actions import ActionInstance, ActionProgram, EpisodeSeed, Interval, Pose
from .camera import CameraSchedule
from .labels import LabelRecord, atomic_vocab, composite_vocab
from .simulate import EpisodeAttributes, ObjectState
from .world import (
    ActionType,
    CameraMode,
    Material,
    ObjectSpec,
    PlacedObject,
    Scene,
    SceneConfig,
    Shape,
    Size,
)

__all__ = [
    "SCHEMA_VERSION",
    "EpisodeMetadata",
    "SplitManifest",
    "config_to_dict",
    "config_from_dict",
    "episode_to_dict",
    "episode_from_dict",
    "write_episode",
    "read_episode",
    "program_from_metadata",
    "write_labels",
    "read_labels",
    "write_attributes",
    "read_attributes",
    "write_predictions",
    "read_predictions",
    "write_split",
    "read_split",
    "write_vocab",
    "write_json",
    "corpus_hash",
]

SCHEMA_VERSION = 1


def _dump(obj: object) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_json(obj: object, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_dump(obj) + "\n")
    return path


# -- scene configuration -----------------------------------------------------


def config_to_dict(config: SceneConfig) -> dict:
    return {
        "n_objects_min": config.n_objects_min,
        "n_objects_max": config.n_objects_max,
        "k_per_slot": "all" if config.k_per_slot is None else config.k_per_slot,
        "frames": config.frames,
        "slot_len": config.slot_len,
        "fps": config.fps,
        "plane_half_extent": config.plane_half_extent,
        "grid_resolution": config.grid_resolution,
        "camera_mode": config.camera_mode.value,
    }


def config_from_dict(d: dict) -> SceneConfig:
    k = d["k_per_slot"]
    return SceneConfig(
        n_objects_min=d["n_objects_min"],
        n_objects_max=d["n_objects_max"],
        k_per_slot=None if k == "all" else int(k),
        frames=d["frames"],
        slot_len=d["slot_len"],
        fps=d["fps"],
        plane_half_extent=d["plane_half_extent"],
        grid_resolution=d["grid_resolution"],
        camera_mode=CameraMode(d["camera_mode"]),
    )


# -- episode metadata --------------------------------------------------------


@dataclass
class EpisodeMetadata:
    """Everything needed to re-derive an episode's labels and tracks."""

    episode_id: str
    master_seed: int
    episode_index: int
    attempt: int
    config: SceneConfig
    scene: Scene
    actions: tuple[ActionInstance, ...]
    camera: CameraSchedule
    snitch_track: tuple[tuple[float, float], ...]
    states: tuple[dict[int, ObjectState], ...] | None = None
    schema_version: int = SCHEMA_VERSION


def _action_to_dict(a: ActionInstance) -> dict:
    return {
        "actor": a.actor_id,
        "action": a.action.value,
        "slot": a.slot,
        "start": a.interval.start,
        "end": a.interval.end,
        "from": [a.start_pose.x, a.start_pose.y, a.start_pose.theta],
        "to": [a.end_pose.x, a.end_pose.y, a.end_pose.theta],
        "target": a.target_id,
    }


def _action_from_dict(d: dict) -> ActionInstance:
    return ActionInstance(
        actor_id=d["actor"],
        action=ActionType(d["action"]),
        slot=d["slot"],
        interval=Interval(d["start"], d["end"]),
        start_pose=Pose(*d["from"]),
        end_pose=Pose(*d["to"]),
        target_id=d["target"],
    )


def episode_to_dict(meta: EpisodeMetadata) -> dict:
    out = {
        "schema_version": meta.schema_version,
        "episode_id": meta.episode_id,
        "master_seed": meta.master_seed,
        "episode_index": meta.episode_index,
        "attempt": meta.attempt,
        "config": config_to_dict(meta.config),
        "objects": [
            {
                "id": p.spec.id,
                "shape": p.spec.shape.value,
                "size": p.spec.size.value,
                "color": p.spec.color,
                "material": p.spec.material.value,
                "x": p.x,
                "y": p.y,
            }
            for p in meta.scene.objects
        ],
        "actions": [_action_to_dict(a) for a in meta.actions],
        "camera": {
            "mode": meta.camera.mode.value,
            "waypoints": [list(w) for w in meta.camera.waypoints],
            "slot_len": meta.camera.slot_len,
            "n_frames": meta.camera.n_frames,
        },
        "snitch_track": [list(p) for p in meta.snitch_track],
    }
    if meta.states is not None:
        out["states"] = [
            {
                str(oid): [s.x, s.y, s.z, s.theta, s.contained_by]
                for oid, s in frame.items()
            }
            for frame in meta.states
        ]
    return out


def episode_from_dict(d: dict) -> EpisodeMetadata:
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {d.get('schema_version')!r}")
    scene = Scene(
        tuple(
            PlacedObject(
                ObjectSpec(
                    o["id"],
                    Shape(o["shape"]),
                    Size(o["size"]),
                    o["color"],
                    Material(o["material"]),
                ),
                o["x"],
                o["y"],
            )
            for o in d["objects"]
        )
    )
    cam = d["camera"]
    states = None
    if "states" in d:
        states = tuple(
            {
                int(oid): ObjectState(v[0], v[1], v[2], v[3], v[4])
                for oid, v in sorted(frame.items(), key=lambda kv: int(kv[0]))
            }
            for frame in d["states"]
        )
    return EpisodeMetadata(
        episode_id=d["episode_id"],
        master_seed=d["master_seed"],
        episode_index=d["episode_index"],
        attempt=d["attempt"],
        config=config_from_dict(d["config"]),
        scene=scene,
        actions=tuple(_action_from_dict(a) for a in d["actions"]),
        camera=CameraSchedule(
            mode=CameraMode(cam["mode"]),
            waypoints=tuple(tuple(w) for w in cam["waypoints"]),
            slot_len=cam["slot_len"],
            n_frames=cam["n_frames"],
        ),
        snitch_track=tuple((p[0], p[1]) for p in d["snitch_track"]),
        states=states,
    )


def write_episode(meta: EpisodeMetadata, path: Path | str) -> Path:
    return write_json(episode_to_dict(meta), path)


def read_episode(path: Path | str) -> EpisodeMetadata:
    return episode_from_dict(json.loads(Path(path).read_text()))


def program_from_metadata(meta: EpisodeMetadata) -> ActionProgram:
    """Rebuild the schedulable program recorded in a metadata file."""
    return ActionProgram(
        scene=meta.scene,
        actions=meta.actions,
        config=meta.config,
        seed=EpisodeSeed(meta.master_seed, meta.episode_index, meta.attempt),
    )


# -- label and attribute lines -----------------------------------------------


def _label_to_dict(rec: LabelRecord) -> dict:
    return {
        "episode_id": rec.episode_id,
        "task1": list(rec.task1),
        "task2": list(rec.task2),
        "task3": {str(g): c for g, c in sorted(rec.task3.items())},
        "grid_resolution": rec.grid_resolution,
    }


def write_labels(records: list[LabelRecord], path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for rec in records:
            fh.write(_dump(_label_to_dict(rec)) + "\n")
    return path


def read_labels(path: Path | str) -> dict[str, LabelRecord]:
    out: dict[str, LabelRecord] = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        rec = LabelRecord(
            episode_id=d["episode_id"],
            task1=tuple(d["task1"]),
            task2=tuple(d["task2"]),
            task3={int(g): c for g, c in d["task3"].items()},
            grid_resolution=d["grid_resolution"],
        )
        out[rec.episode_id] = rec
    return out


def write_attributes(attrs: dict[str, EpisodeAttributes], path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for episode_id in sorted(attrs):
            a = attrs[episode_id]
            fh.write(
                _dump(
                    {
                        "episode_id": episode_id,
                        "last_move_frame": a.last_move_frame,
                        "contained_at_end": a.contained_at_end,
                        "containment_depth": a.containment_depth,
                        "displacement_cells": a.displacement_cells,
                        "n_objects": a.n_objects,
                    }
                )
                + "\n"
            )
    return path


def read_attributes(path: Path | str) -> dict[str, EpisodeAttributes]:
    out: dict[str, EpisodeAttributes] = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        out[d["episode_id"]] = EpisodeAttributes(
            last_move_frame=d["last_move_frame"],
            contained_at_end=d["contained_at_end"],
            containment_depth=d["containment_depth"],
            displacement_cells=d["displacement_cells"],
            n_objects=d["n_objects"],
        )
    return out


# -- predictions -------------------------------------------------------------


def write_predictions(preds, path: Path | str) -> Path:
    """Write one line per episode: episode_id, task, and the score vector."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for episode_id, row in zip(preds.episode_ids, preds.scores):
            fh.write(
                _dump(
                    {
                        "episode_id": episode_id,
                        "task": preds.task,
                        "scores": [float(v) for v in row],
                    }
                )
                + "\n"
            )
    return path


def read_predictions(path: Path | str, *, task: str | None = None, n_classes: int | None = None):
    """Read a prediction file into a PredictionSet.

    Rows either carry a full score vector or, for task3, a bare cell index
    (converted to a one-hot vector of n_classes scores).
    """
    from .evaluate import PredictionSet

    ids: list[str] = []
    rows: list[np.ndarray] = []
    seen_task: str | None = task
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        row_task = d.get("task")
        if row_task is None:
            raise ValueError("prediction line missing task")
        if seen_task is None:
            seen_task = row_task
        if row_task != seen_task:
            if task is not None:
                continue  # explicit task filter: skip other tasks
            raise ValueError(f"mixed tasks in prediction file: {seen_task} vs {row_task}")
        if "scores" in d:
            rows.append(np.asarray(d["scores"], dtype=float))
        elif "cell" in d:
            if row_task != "task3":
                raise ValueError("bare cell predictions are only valid for task3")
            if n_classes is None:
                raise ValueError("cell predictions need n_classes (grid squared)")
            cell = int(d["cell"])
            if not 0 <= cell < n_classes:
                raise ValueError(f"cell {cell} out of range for {n_classes} classes")
            onehot = np.zeros(n_classes)
            onehot[cell] = 1.0
            rows.append(onehot)
        else:
            raise ValueError("prediction line needs scores or cell")
        ids.append(d["episode_id"])
    if not rows:
        raise ValueError(f"no predictions for task {task!r} in {path}")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"inconsistent score widths in prediction file: {sorted(widths)}")
    return PredictionSet(seen_task, tuple(ids), np.stack(rows))


# -- split manifests ---------------------------------------------------------


@dataclass(frozen=True)
class SplitManifest:
    """Reproducible train/val/test partition of episode ids."""

    seed: int
    test_ratio: float
    val_ratio: float
    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]

    def subset(self, name: str) -> tuple[str, ...]:
        if name not in ("train", "val", "test"):
            raise ValueError(f"unknown split subset {name!r}")
        return getattr(self, name)


def write_split(split: SplitManifest, path: Path | str) -> Path:
    return write_json(
        {
            "schema_version": SCHEMA_VERSION,
            "seed": split.seed,
            "test_ratio": split.test_ratio,
            "val_ratio": split.val_ratio,
            "train": list(split.train),
            "val": list(split.val),
            "test": list(split.test),
        },
        path,
    )


def read_split(path: Path | str) -> SplitManifest:
    d = json.loads(Path(path).read_text())
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {d.get('schema_version')!r}")
    return SplitManifest(
        seed=d["seed"],
        test_ratio=d["test_ratio"],
        val_ratio=d["val_ratio"],
        train=tuple(d["train"]),
        val=tuple(d["val"]),
        test=tuple(d["test"]),
    )


def write_vocab(path: Path | str) -> Path:
    """Class-index to human-readable name mapping for tasks 1 and 2."""
    return write_json(
        {
            "task1": [c.name for c in atomic_vocab()],
            "task2": [c.name for c in composite_vocab()],
        },
        path,
    )


# -- corpus hashing ----------------------------------------------------------


def corpus_hash(root: Path | str) -> str:
    """SHA-256 over every file under root, in sorted relative-path order."""
    root = Path(root)
    digest = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        digest.update(str(path.relative_to(root)).encode())
        digest.update(b"\0")
        digest.update(path.read_bytes())
    return digest.hexdigest()
