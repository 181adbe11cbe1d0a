"""Corpus generation: seed fan-out, episode assembly, splits, re-derivation.

An episode is a pure function of (master_seed, index, attempt): the per-episode
generator is spawned from a SeedSequence keyed on those three values, so any
worker count or generation order produces identical bytes.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .actions import ActionProgram, EpisodeSeed
from .camera import camera_schedule
from .io import (
    SCHEMA_VERSION,
    EpisodeMetadata,
    SplitManifest,
    config_to_dict,
    corpus_hash,
    program_from_metadata,
    read_episode,
    write_attributes,
    write_episode,
    write_json,
    write_labels,
    write_vocab,
)
from .labels import (
    DEFAULT_GRIDS,
    LabelRecord,
    atomic_vocab,
    composite_vocab,
    make_label_record,
)
from .program import schedule_episode
from .simulate import EpisodeAttributes, episode_attributes, replay
from .world import PlacementError, SceneConfig, spawn_scene

__all__ = [
    "EpisodeResult",
    "GenerationReport",
    "episode_rng",
    "episode_id_for",
    "generate_episode",
    "generate_corpus",
    "make_split",
    "read_manifest",
    "iter_episodes",
    "rederive_labels",
]

# Fresh spawn keys per retry keep a crowded-scene rejection from perturbing
# every later episode.
MAX_EPISODE_ATTEMPTS = 20


def episode_rng(seed: EpisodeSeed) -> np.random.Generator:
    ss = np.random.SeedSequence(seed.master_seed, spawn_key=(seed.index, seed.attempt))
    return np.random.Generator(np.random.PCG64(ss))


def episode_id_for(master_seed: int, index: int) -> str:
    return f"s{master_seed}_e{index:05d}"


@dataclass(frozen=True)
class EpisodeResult:
    metadata: EpisodeMetadata
    label: LabelRecord
    attributes: EpisodeAttributes


def generate_episode(
    master_seed: int,
    index: int,
    config: SceneConfig,
    *,
    grids: tuple[int, ...] = DEFAULT_GRIDS,
    keep_states: bool = False,
) -> EpisodeResult:
    """Spawn, schedule, and replay one episode; derive its labels.

    Draw order within an attempt is fixed (scene, then camera, then actions);
    changing it would change every downstream value.
    """
    last_error: PlacementError | None = None
    for attempt in range(MAX_EPISODE_ATTEMPTS):
        seed = EpisodeSeed(master_seed, index, attempt)
        rng = episode_rng(seed)
        try:
            scene = spawn_scene(config, rng)
        except PlacementError as err:
            last_error = err
            continue
        camera = camera_schedule(config.camera_mode, config, rng)
        program = schedule_episode(scene, config, rng, seed=seed)
        timeline = replay(program, camera=camera)
        episode_id = episode_id_for(master_seed, index)
        meta = EpisodeMetadata(
            episode_id=episode_id,
            master_seed=master_seed,
            episode_index=index,
            attempt=attempt,
            config=config,
            scene=scene,
            actions=program.actions,
            camera=camera,
            snitch_track=timeline.snitch_track,
            states=tuple(dict(f) for f in timeline.frames) if keep_states else None,
        )
        label = make_label_record(episode_id, program, timeline, grids)
        return EpisodeResult(meta, label, episode_attributes(timeline))
    raise PlacementError(
        f"episode {index} failed to spawn after {MAX_EPISODE_ATTEMPTS} attempts"
    ) from last_error


@dataclass(frozen=True)
class GenerationReport:
    """Corpus-level summary collected while generating.

    The per-task histograms double as the qualitative sanity check: task 1
    near-balanced, task 2 long-tailed, task 3 near-uniform over cells.
    """

    n_episodes: int
    master_seed: int
    elapsed_s: float
    total_actions: int
    retries: dict[str, int]  # episode id -> extra spawn attempts used
    class_counts: dict[str, int]
    pair_counts: tuple[int, ...]
    cell_counts: tuple[int, ...]

    @property
    def mean_actions_per_episode(self) -> float:
        return self.total_actions / self.n_episodes

    def as_dict(self) -> dict:
        return {
            "n_episodes": self.n_episodes,
            "master_seed": self.master_seed,
            "elapsed_s": round(self.elapsed_s, 3),
            "total_actions": self.total_actions,
            "mean_actions_per_episode": round(self.mean_actions_per_episode, 3),
            "retries": self.retries,
            "class_counts": self.class_counts,
            "pair_counts": list(self.pair_counts),
            "cell_counts": list(self.cell_counts),
        }


def _summarize(results: list[EpisodeResult], master_seed: int, elapsed: float) -> GenerationReport:
    names = [c.name for c in atomic_vocab()]
    class_counts = dict.fromkeys(names, 0)
    pairs = np.zeros(len(composite_vocab()), dtype=int)
    for res in results:
        for idx in res.label.task1:
            class_counts[names[idx]] += 1
        for idx in res.label.task2:
            pairs[idx] += 1
    grid = results[0].metadata.config.grid_resolution
    cells = np.zeros(grid * grid, dtype=int)
    for res in results:
        cells[res.label.task3_cell(grid)] += 1
    return GenerationReport(
        n_episodes=len(results),
        master_seed=master_seed,
        elapsed_s=elapsed,
        total_actions=sum(len(r.metadata.actions) for r in results),
        retries={
            r.metadata.episode_id: r.metadata.attempt
            for r in results
            if r.metadata.attempt > 0
        },
        class_counts=class_counts,
        pair_counts=tuple(int(c) for c in pairs),
        cell_counts=tuple(int(c) for c in cells),
    )


def generate_corpus(
    out_dir: Path | str,
    n_episodes: int,
    master_seed: int,
    config: SceneConfig,
    *,
    grids: tuple[int, ...] = DEFAULT_GRIDS,
    workers: int = 1,
    keep_states: bool = False,
) -> GenerationReport:
    """Generate a corpus directory: episodes/, labels, attributes, manifest."""
    if n_episodes < 1:
        raise ValueError("n_episodes must be positive")
    out_dir = Path(out_dir)
    episodes_dir = out_dir / "episodes"
    episodes_dir.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()

    def one(index: int) -> EpisodeResult:
        return generate_episode(
            master_seed, index, config, grids=grids, keep_states=keep_states
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(n_episodes)))
    else:
        results = [one(i) for i in range(n_episodes)]
    elapsed = time.perf_counter() - t0

    # Files are written after collection, in index order, so worker count
    # never shows up in the output bytes.
    for res in results:
        write_episode(res.metadata, episodes_dir / f"{res.metadata.episode_id}.json")
    write_labels([r.label for r in results], out_dir / "labels.jsonl")
    write_attributes(
        {r.metadata.episode_id: r.attributes for r in results},
        out_dir / "attributes.jsonl",
    )
    write_vocab(out_dir / "vocab.json")

    report = _summarize(results, master_seed, elapsed)
    write_json(
        {
            "schema_version": SCHEMA_VERSION,
            "master_seed": master_seed,
            "n_episodes": n_episodes,
            "config": config_to_dict(config),
            "grids": list(grids),
            "episode_ids": [r.metadata.episode_id for r in results],
            "content_hash": corpus_hash(episodes_dir),
            "report": report.as_dict(),
        },
        out_dir / "manifest.json",
    )
    return report


# -- splits ------------------------------------------------------------------


def make_split(
    episode_ids: list[str] | tuple[str, ...],
    seed: int,
    *,
    test_ratio: float = 0.3,
    val_ratio: float = 0.2,
) -> SplitManifest:
    """Partition ids into train/val/test.

    Test is carved off the whole corpus first; val is then carved off the
    remaining pool. Ratios are rounded to the nearest episode.
    """
    if not 0.0 <= test_ratio < 1.0 or not 0.0 <= val_ratio < 1.0:
        raise ValueError("split ratios must be in [0, 1)")
    ids = sorted(episode_ids)
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate episode ids in split input")
    rng = np.random.default_rng(seed)
    permuted = [ids[i] for i in rng.permutation(len(ids))]
    n_test = round(len(ids) * test_ratio)
    pool = permuted[n_test:]
    n_val = round(len(pool) * val_ratio)
    if len(pool) - n_val < 1:
        raise ValueError("split leaves an empty training set")
    return SplitManifest(
        seed=seed,
        test_ratio=test_ratio,
        val_ratio=val_ratio,
        train=tuple(sorted(pool[n_val:])),
        val=tuple(sorted(pool[:n_val])),
        test=tuple(sorted(permuted[:n_test])),
    )


# -- reading a corpus back ---------------------------------------------------


def read_manifest(root: Path | str) -> dict:
    import json

    path = Path(root) / "manifest.json"
    if not path.is_file():
        raise FileNotFoundError(f"no manifest.json under {root}")
    return json.loads(path.read_text())


def iter_episodes(root: Path | str, episode_ids: list[str] | None = None):
    """Yield stored episodes, in manifest order unless ids are given."""
    root = Path(root)
    if episode_ids is None:
        episode_ids = read_manifest(root)["episode_ids"]
    for episode_id in episode_ids:
        yield read_episode(root / "episodes" / f"{episode_id}.json")


def rederive_labels(
    root: Path | str,
    *,
    grids: tuple[int, ...] = DEFAULT_GRIDS,
    episode_ids: list[str] | None = None,
    verify: bool = True,
) -> tuple[list[LabelRecord], dict[str, EpisodeAttributes]]:
    """Replay stored episodes and rebuild labels and attributes from scratch.

    With verify on, the fresh snitch track must match the stored one exactly;
    a mismatch means the files were edited or the replay drifted.
    """
    records: list[LabelRecord] = []
    attrs: dict[str, EpisodeAttributes] = {}
    for meta in iter_episodes(root, episode_ids):
        program = program_from_metadata(meta)
        timeline = replay(program, camera=meta.camera)
        if verify and timeline.snitch_track != meta.snitch_track:
            raise ValueError(f"snitch track mismatch for {meta.episode_id}")
        records.append(make_label_record(meta.episode_id, program, timeline, grids))
        attrs[meta.episode_id] = episode_attributes(timeline)
    return records, attrs
