"""Metrics: average precision for multi-label tasks, top-k and grid L1 for cells."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .labels import LabelRecord, atomic_vocab, composite_vocab

__all__ = [
    "PredictionSet",
    "MetricsReport",
    "RandomBaselineReport",
    "average_precision",
    "multilabel_ap",
    "evaluate",
    "random_baseline",
    "closed_form_random",
]

_TASK_SIZES = {"task1": lambda grid: len(atomic_vocab()), "task2": lambda grid: len(composite_vocab())}


@dataclass(frozen=True)
class PredictionSet:
    """Per-episode score vectors for one task, aligned with episode_ids."""

    task: str
    episode_ids: tuple[str, ...]
    scores: np.ndarray

    def __post_init__(self) -> None:
        if self.task not in ("task1", "task2", "task3"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.scores.ndim != 2 or self.scores.shape[0] != len(self.episode_ids):
            raise ValueError("scores must be (n_episodes, n_classes)")
        if len(set(self.episode_ids)) != len(self.episode_ids):
            raise ValueError("duplicate episode ids in predictions")

    def sorted_by_id(self) -> "PredictionSet":
        order = np.argsort(np.array(self.episode_ids))
        return PredictionSet(
            self.task,
            tuple(self.episode_ids[i] for i in order),
            self.scores[order],
        )


def average_precision(scores: np.ndarray, positives: np.ndarray) -> float:
    """Precision averaged at each positive, ranked by descending score.

    Inputs must already be ordered by ascending episode id; ties in score keep
    that order (stable sort), which makes the metric deterministic.
    """
    scores = np.asarray(scores, dtype=float)
    positives = np.asarray(positives).astype(bool)
    n_pos = int(positives.sum())
    if n_pos == 0:
        raise ValueError("average precision undefined with zero positives")
    order = np.argsort(-scores, kind="stable")
    hits = positives[order]
    cum = np.cumsum(hits)
    ranks = np.arange(1, len(scores) + 1)
    return float((cum[hits] / ranks[hits]).sum() / n_pos)


def multilabel_ap(scores: np.ndarray, labels: np.ndarray) -> tuple[dict[int, float], float]:
    """Per-class AP over classes with at least one positive, plus their mean.

    Percentages (0 to 100). Rows must be ordered by ascending episode id.
    """
    labels = np.asarray(labels).astype(bool)
    order = np.argsort(-scores, axis=0, kind="stable")
    sorted_labels = np.take_along_axis(labels, order, axis=0)
    cum = np.cumsum(sorted_labels, axis=0)
    ranks = np.arange(1, scores.shape[0] + 1)[:, None]
    prec = cum / ranks
    n_pos = labels.sum(axis=0)
    per_class: dict[int, float] = {}
    for c in np.flatnonzero(n_pos):
        col = sorted_labels[:, c]
        per_class[int(c)] = float(prec[col, c].sum() / n_pos[c] * 100.0)
    if not per_class:
        raise ValueError("no class has a positive label")
    return per_class, float(np.mean(list(per_class.values())))


@dataclass
class MetricsReport:
    """Evaluation summary for one prediction set."""

    task: str
    n_episodes: int
    mean_ap: float | None = None
    per_class_ap: dict[int, float] | None = None
    n_classes: int | None = None
    top1: float | None = None
    top5: float | None = None
    mean_l1: float | None = None
    grid: int | None = None

    def as_dict(self) -> dict:
        out = {"task": self.task, "n_episodes": self.n_episodes}
        if self.mean_ap is not None:
            out["mean_ap"] = self.mean_ap
            out["n_classes"] = self.n_classes
            out["per_class_ap"] = {str(k): v for k, v in sorted(self.per_class_ap.items())}
        if self.top1 is not None:
            out.update(
                {"grid": self.grid, "top1": self.top1, "top5": self.top5, "mean_l1": self.mean_l1}
            )
        return out

    def format_table(self) -> str:
        lines = [f"task {self.task} on {self.n_episodes} episodes"]
        if self.mean_ap is not None:
            lines.append(f"  mAP {self.mean_ap:.1f} over {self.n_classes} classes")
        if self.top1 is not None:
            lines.append(
                f"  top1 {self.top1:.1f}  top5 {self.top5:.1f}  meanL1 {self.mean_l1:.2f}"
                f"  (grid {self.grid})"
            )
        return "\n".join(lines)


def _aligned_scores(
    preds: PredictionSet, labels: dict[str, LabelRecord]
) -> tuple[PredictionSet, list[LabelRecord]]:
    missing = [e for e in preds.episode_ids if e not in labels]
    if missing:
        raise ValueError(f"predictions reference unlabeled episodes, e.g. {missing[0]!r}")
    ordered = preds.sorted_by_id()
    return ordered, [labels[e] for e in ordered.episode_ids]


def _rank_cells(scores: np.ndarray) -> np.ndarray:
    # ties broken toward the lower cell index, deterministically
    return np.argsort(-scores, axis=1, kind="stable")


def _grid_l1(cells_a: np.ndarray, cells_b: np.ndarray, grid: int) -> np.ndarray:
    return np.abs(cells_a // grid - cells_b // grid) + np.abs(cells_a % grid - cells_b % grid)


def evaluate(
    preds: PredictionSet, labels: dict[str, LabelRecord], *, grid: int = 6
) -> MetricsReport:
    """Score predictions against label records."""
    ordered, recs = _aligned_scores(preds, labels)
    n = len(recs)
    if preds.task in _TASK_SIZES:
        width = _TASK_SIZES[preds.task](grid)
        if ordered.scores.shape[1] != width:
            raise ValueError(
                f"{preds.task} expects {width} scores per episode, got {ordered.scores.shape[1]}"
            )
        mat = np.stack(
            [r.task1_vector() if preds.task == "task1" else r.task2_vector() for r in recs]
        )
        per_class, mean_ap = multilabel_ap(ordered.scores, mat)
        return MetricsReport(
            task=preds.task,
            n_episodes=n,
            mean_ap=mean_ap,
            per_class_ap=per_class,
            n_classes=len(per_class),
        )
    n_cells = grid * grid
    if ordered.scores.shape[1] != n_cells:
        raise ValueError(f"task3 expects {n_cells} scores per episode at grid {grid}")
    truth = np.array([r.task3_cell(grid) for r in recs])
    ranked = _rank_cells(ordered.scores)
    top1_hits = ranked[:, 0] == truth
    top5_hits = (ranked[:, :5] == truth[:, None]).any(axis=1)
    l1 = _grid_l1(ranked[:, 0], truth, grid)
    return MetricsReport(
        task="task3",
        n_episodes=n,
        top1=float(top1_hits.mean() * 100.0),
        top5=float(top5_hits.mean() * 100.0),
        mean_l1=float(l1.mean()),
        grid=grid,
    )


def closed_form_random(grid: int) -> tuple[float, float, float]:
    """Exact expectations for a uniform random cell guess against uniform truth."""
    cells = grid * grid
    top1 = 100.0 / cells
    top5 = 100.0 * min(5, cells) / cells
    mean_l1 = 2.0 * (grid * grid - 1) / (3.0 * grid)
    return top1, top5, mean_l1


@dataclass
class RandomBaselineReport:
    """Monte-Carlo random-score baseline, with closed forms where they exist."""

    task: str
    trials: int
    n_episodes: int
    mean_ap: float | None = None
    mean_prevalence: float | None = None
    top1: float | None = None
    top5: float | None = None
    mean_l1: float | None = None
    grid: int | None = None
    closed_top1: float | None = None
    closed_top5: float | None = None
    closed_l1: float | None = None

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}

    def format_table(self) -> str:
        lines = [
            f"random baseline, task {self.task}: "
            f"{self.trials} trials over {self.n_episodes} episodes"
        ]
        if self.mean_ap is not None:
            lines.append(
                f"  mAP {self.mean_ap:.1f}  (mean prevalence {self.mean_prevalence:.1f})"
            )
        if self.top1 is not None:
            lines.append(
                f"  top1 {self.top1:.2f}  top5 {self.top5:.2f}  meanL1 {self.mean_l1:.3f}"
            )
            lines.append(
                f"  closed form: top1 {self.closed_top1:.2f}  top5 {self.closed_top5:.2f}"
                f"  meanL1 {self.closed_l1:.3f}"
            )
        return "\n".join(lines)


def random_baseline(
    task: str,
    labels: dict[str, LabelRecord],
    *,
    trials: int,
    rng: np.random.Generator,
    grid: int = 6,
) -> RandomBaselineReport:
    """Monte-Carlo expectation of metrics under uniform random scores."""
    ids = tuple(sorted(labels))
    n = len(ids)
    if task in _TASK_SIZES:
        width = _TASK_SIZES[task](grid)
        mat = np.stack(
            [
                labels[e].task1_vector() if task == "task1" else labels[e].task2_vector()
                for e in ids
            ]
        ).astype(bool)
        n_pos = mat.sum(axis=0)
        live = np.flatnonzero(n_pos)
        prevalence = float(n_pos[live].mean() / n * 100.0)
        maps = []
        for _ in range(trials):
            scores = rng.random((n, width))
            _, mean_ap = multilabel_ap(scores, mat)
            maps.append(mean_ap)
        return RandomBaselineReport(
            task=task,
            trials=trials,
            n_episodes=n,
            mean_ap=float(np.mean(maps)),
            mean_prevalence=prevalence,
        )
    if task != "task3":
        raise ValueError(f"unknown task {task!r}")
    cells = grid * grid
    truth = np.array([labels[e].task3_cell(grid) for e in ids])
    top1s, top5s, l1s = [], [], []
    for _ in range(trials):
        scores = rng.random((n, cells))
        ranked = _rank_cells(scores)
        top1s.append(float((ranked[:, 0] == truth).mean() * 100.0))
        top5s.append(float((ranked[:, :5] == truth[:, None]).any(axis=1).mean() * 100.0))
        l1s.append(float(_grid_l1(ranked[:, 0], truth, grid).mean()))
    c1, c5, cl1 = closed_form_random(grid)
    return RandomBaselineReport(
        task="task3",
        trials=trials,
        n_episodes=n,
        top1=float(np.mean(top1s)),
        top5=float(np.mean(top5s)),
        mean_l1=float(np.mean(l1s)),
        grid=grid,
        closed_top1=c1,
        closed_top5=c5,
        closed_l1=cl1,
    )
