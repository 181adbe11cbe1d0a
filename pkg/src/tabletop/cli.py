"""Command-line surface: dataset production, evaluation, and export.

Exit codes: 0 success, 2 validation problems (bad arguments, malformed or
inconsistent records), 3 I/O problems (missing files, unreadable content).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .corpus import (
    generate_corpus,
    iter_episodes,
    make_split,
    read_manifest,
    rederive_labels,
)
from .diagnostics import ATTRIBUTES, diagnose
from .evaluate import PredictionSet, evaluate, random_baseline
from .io import (
    program_from_metadata,
    read_attributes,
    read_episode,
    read_labels,
    read_predictions,
    read_split,
    write_attributes,
    write_json,
    write_labels,
    write_split,
)
from .labels import DEFAULT_GRIDS
from .simulate import replay
from .tracks import INIT_BOX_SIZE, tracks_to_dict
from .validate import ProgramValidationError
from .viz import render_episode, render_frame_strip
from .world import CameraMode, PlacementError, SceneConfig

ENV_DATA_ROOT = "TABLETOP_DATA_ROOT"


def data_root() -> Path:
    return Path(os.environ.get(ENV_DATA_ROOT, "data"))


def _default_corpus() -> str:
    return str(data_root() / "corpus")


# -- argument plumbing -------------------------------------------------------


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("scene configuration")
    g.add_argument("--n-objects-min", type=int, default=5)
    g.add_argument("--n-objects-max", type=int, default=10)
    g.add_argument(
        "--k-per-slot",
        default="2",
        help="movers attempted per slot; 'all' lets every free object try",
    )
    g.add_argument("--frames", type=int, default=300)
    g.add_argument("--slot-len", type=int, default=30)
    g.add_argument("--fps", type=int, default=24)
    g.add_argument("--half-extent", type=float, default=3.0)
    g.add_argument("--grid", type=int, default=6, help="cells per side for task 3")
    g.add_argument("--camera", choices=[m.value for m in CameraMode], default="static")


def _config_from_args(args: argparse.Namespace) -> SceneConfig:
    k = args.k_per_slot
    return SceneConfig(
        n_objects_min=args.n_objects_min,
        n_objects_max=args.n_objects_max,
        k_per_slot=None if k == "all" else int(k),
        frames=args.frames,
        slot_len=args.slot_len,
        fps=args.fps,
        plane_half_extent=args.half_extent,
        grid_resolution=args.grid,
        camera_mode=CameraMode(args.camera),
    )


def _grids_arg(raw: str) -> tuple[int, ...]:
    return tuple(int(g) for g in raw.split(","))


def _subset_ids(args: argparse.Namespace) -> list[str] | None:
    if not getattr(args, "split", None):
        return None
    return list(read_split(args.split).subset(args.subset))


def _restrict(labels: dict, ids: list[str] | None) -> dict:
    if ids is None:
        return labels
    missing = [e for e in ids if e not in labels]
    if missing:
        raise ValueError(f"split references unknown episode, e.g. {missing[0]!r}")
    return {e: labels[e] for e in ids}


def _filter_preds(preds: PredictionSet, ids: list[str] | None) -> PredictionSet:
    """Keep prediction rows inside the split subset; the subset must be covered."""
    if ids is None:
        return preds
    want = set(ids)
    missing = sorted(want - set(preds.episode_ids))
    if missing:
        raise ValueError(f"predictions missing for split episode, e.g. {missing[0]!r}")
    keep = [i for i, e in enumerate(preds.episode_ids) if e in want]
    return PredictionSet(
        preds.task,
        tuple(preds.episode_ids[i] for i in keep),
        preds.scores[keep],
    )


def _emit(text: str, payload: dict, out: str | None) -> None:
    print(text)
    if out:
        write_json(payload, out)
        print(f"wrote {out}")


# -- subcommands -------------------------------------------------------------


def cmd_generate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    report = generate_corpus(
        args.out,
        args.n,
        args.seed,
        config,
        grids=_grids_arg(args.task3_grids),
        workers=args.workers,
        keep_states=args.keep_states,
    )
    print(f"generated {report.n_episodes} episodes into {args.out}")
    print(
        f"  actions: {report.total_actions} total, "
        f"{report.mean_actions_per_episode:.2f} per episode"
    )
    if report.retries:
        print(f"  respawned after placement failure: {sorted(report.retries)}")
    print(f"  elapsed: {report.elapsed_s:.1f}s")
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    manifest = read_manifest(args.corpus)
    split = make_split(
        manifest["episode_ids"],
        args.seed,
        test_ratio=args.test_ratio,
        val_ratio=args.val_ratio,
    )
    out = args.out or str(Path(args.corpus) / "split.json")
    write_split(split, out)
    print(
        f"split {len(manifest['episode_ids'])} episodes: "
        f"train {len(split.train)}, val {len(split.val)}, test {len(split.test)}"
    )
    print(f"wrote {out}")
    return 0


def cmd_labels(args: argparse.Namespace) -> int:
    records, attrs = rederive_labels(
        args.corpus, grids=_grids_arg(args.task3_grids), verify=not args.no_verify
    )
    out = args.out or str(Path(args.corpus) / "labels.jsonl")
    write_labels(records, out)
    write_attributes(attrs, Path(out).with_name("attributes.jsonl"))
    print(f"re-derived labels for {len(records)} episodes -> {out}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    ids = _subset_ids(args)
    labels = _restrict(read_labels(args.labels), ids)
    n_classes = args.grid * args.grid if args.task == "task3" else None
    preds = _filter_preds(read_predictions(args.pred, task=args.task, n_classes=n_classes), ids)
    report = evaluate(preds, labels, grid=args.grid)
    _emit(report.format_table(), report.as_dict(), args.out)
    return 0


def cmd_diagnose(args: argparse.Namespace) -> int:
    ids = _subset_ids(args)
    labels = _restrict(read_labels(args.labels), ids)
    attrs = read_attributes(args.attributes)
    n_classes = args.grid * args.grid if args.task == "task3" else None
    preds = _filter_preds(read_predictions(args.pred, task=args.task, n_classes=n_classes), ids)
    report = diagnose(
        preds,
        labels,
        attrs,
        args.attribute,
        grid=args.grid,
        slot_len=args.slot_len,
        frames=args.frames,
    )
    _emit(report.format_table(), report.as_dict(), args.out)
    return 0


def _load_timeline(args: argparse.Namespace):
    if args.episode:
        meta = read_episode(args.episode)
    else:
        path = Path(args.corpus) / "episodes" / f"{args.id}.json"
        meta = read_episode(path)
    return meta, replay(program_from_metadata(meta), camera=meta.camera)


def cmd_viz(args: argparse.Namespace) -> int:
    meta, timeline = _load_timeline(args)
    heat = None
    if args.pred:
        grid = meta.config.grid_resolution
        preds = read_predictions(args.pred, task="task3", n_classes=grid * grid)
        try:
            row = preds.episode_ids.index(meta.episode_id)
        except ValueError:
            raise ValueError(f"no prediction row for {meta.episode_id}") from None
        heat = preds.scores[row]
    out = args.out or f"{meta.episode_id}.png"
    if args.strip:
        render_frame_strip(timeline, out, every=args.every)
    else:
        render_episode(timeline, out, heat=heat, title=meta.episode_id)
    print(f"wrote {out}")
    return 0


def cmd_export_tracks(args: argparse.Namespace) -> int:
    ids = args.ids or None
    out = args.out or str(Path(args.corpus) / "tracks.jsonl")
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(out, "w") as fh:
        for meta in iter_episodes(args.corpus, ids):
            timeline = replay(program_from_metadata(meta), camera=meta.camera)
            doc = tracks_to_dict(timeline, meta.episode_id, box_size=args.box_size)
            fh.write(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")
            count += 1
    print(f"exported tracks for {count} episodes -> {out}")
    return 0


def cmd_baseline_random(args: argparse.Namespace) -> int:
    labels = _restrict(read_labels(args.labels), _subset_ids(args))
    report = random_baseline(
        args.task,
        labels,
        trials=args.trials,
        rng=np.random.default_rng(args.seed),
        grid=args.grid,
    )
    _emit(report.format_table(), report.as_dict(), args.out)
    return 0


# -- parser ------------------------------------------------------------------


def _add_split_filter(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--split", help="restrict to one subset of a split manifest")
    parser.add_argument("--subset", choices=["train", "val", "test"], default="test")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tabletop",
        description="Procedural tabletop video-reasoning dataset toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a corpus of episodes")
    p.add_argument("--out", default=_default_corpus())
    p.add_argument("--n", type=int, required=True, help="number of episodes")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--task3-grids", default="4,6,8", help="comma-separated grid sizes")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--keep-states", action="store_true", help="store all object states")
    _add_config_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("split", help="partition a corpus into train/val/test")
    p.add_argument("--corpus", default=_default_corpus())
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-ratio", type=float, default=0.3)
    p.add_argument("--val-ratio", type=float, default=0.2)
    p.add_argument("--out")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("labels", help="re-derive labels from stored metadata")
    p.add_argument("--corpus", default=_default_corpus())
    p.add_argument("--task3-grids", default="4,6,8")
    p.add_argument("--no-verify", action="store_true", help="skip track comparison")
    p.add_argument("--out")
    p.set_defaults(func=cmd_labels)

    p = sub.add_parser("eval", help="score a prediction file")
    p.add_argument("--labels", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--task", choices=["task1", "task2", "task3"], required=True)
    p.add_argument("--grid", type=int, default=6)
    _add_split_filter(p)
    p.add_argument("--out", help="also write the report as a structured file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("diagnose", help="per-attribute-bin metric breakdown")
    p.add_argument("--labels", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--task", choices=["task1", "task2", "task3"], required=True)
    p.add_argument("--attributes", required=True)
    p.add_argument("--attribute", choices=list(ATTRIBUTES), required=True)
    p.add_argument("--grid", type=int, default=6)
    p.add_argument("--slot-len", type=int, default=30)
    p.add_argument("--frames", type=int, default=300)
    _add_split_filter(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("viz", help="render a top-down schematic of an episode")
    p.add_argument("--episode", help="path to one episode metadata file")
    p.add_argument("--corpus", default=_default_corpus())
    p.add_argument("--id", help="episode id within --corpus")
    p.add_argument("--pred", help="task3 prediction file to overlay as a heat map")
    p.add_argument("--strip", action="store_true", help="render a frame strip instead")
    p.add_argument("--every", type=int, default=60, help="frame stride for --strip")
    p.add_argument("--out")
    p.set_defaults(func=cmd_viz)

    p = sub.add_parser("export-tracks", help="project object tracks to pixels")
    p.add_argument("--corpus", default=_default_corpus())
    p.add_argument("--ids", nargs="*", help="subset of episode ids")
    p.add_argument("--box-size", type=int, default=INIT_BOX_SIZE)
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_tracks)

    p = sub.add_parser("baseline-random", help="random-scores reference metrics")
    p.add_argument("--labels", required=True)
    p.add_argument("--task", choices=["task1", "task2", "task3"], required=True)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int, default=6)
    _add_split_filter(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_baseline_random)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "viz" and not args.episode and not args.id:
        print("error: viz needs --episode or --corpus with --id", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except json.JSONDecodeError as err:
        print(f"i/o error: unreadable file: {err}", file=sys.stderr)
        return 3
    except (FileNotFoundError, OSError) as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 3
    except (ProgramValidationError, PlacementError, ValueError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
