"""Slice evaluation results by episode attributes (motion timing, containment, ...)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluate import PredictionSet, _aligned_scores, _rank_cells, multilabel_ap
from .labels import LabelRecord
from .simulate import EpisodeAttributes

__all__ = ["ATTRIBUTES", "BinStat", "DiagnosticReport", "diagnose"]

ATTRIBUTES = ("last_move_frame", "contained_at_end", "displacement_cells", "n_objects")


@dataclass(frozen=True)
class BinStat:
    """One attribute bin: population and the metric over it (None when empty)."""

    label: str
    count: int
    metric: float | None


@dataclass
class DiagnosticReport:
    task: str
    attribute: str
    metric_name: str
    bins: list[BinStat]
    overall: float
    n_episodes: int

    def as_dict(self) -> dict:
        return {
            "task": self.task,
            "attribute": self.attribute,
            "metric": self.metric_name,
            "overall": self.overall,
            "n_episodes": self.n_episodes,
            "bins": [
                {"label": b.label, "count": b.count, "metric": b.metric} for b in self.bins
            ],
        }

    def format_table(self) -> str:
        lines = [
            f"task {self.task} by {self.attribute}: overall {self.metric_name} "
            f"{self.overall:.1f} on {self.n_episodes} episodes"
        ]
        for b in self.bins:
            shown = "empty" if b.metric is None else f"{b.metric:.1f}"
            lines.append(f"  {b.label:>16}  n={b.count:<6} {self.metric_name}={shown}")
        return "\n".join(lines)


def _bin_assignments(
    attribute: str,
    attrs: list[EpisodeAttributes],
    *,
    grid: int,
    slot_len: int,
    frames: int,
) -> tuple[list[str], np.ndarray]:
    """Bin labels plus the bin index of every episode."""
    if attribute == "last_move_frame":
        n_bins = frames // slot_len
        labels = [f"[{s * slot_len},{(s + 1) * slot_len})" for s in range(n_bins)]
        idx = np.array([a.last_move_frame // slot_len for a in attrs])
    elif attribute == "contained_at_end":
        labels = ["visible", "contained"]
        idx = np.array([int(a.contained_at_end) for a in attrs])
    elif attribute == "displacement_cells":
        n_bins = 2 * (grid - 1) + 1
        labels = [str(d) for d in range(n_bins)]
        idx = np.array([a.displacement_cells for a in attrs])
    elif attribute == "n_objects":
        lo = min(a.n_objects for a in attrs)
        hi = max(a.n_objects for a in attrs)
        labels = [str(n) for n in range(lo, hi + 1)]
        idx = np.array([a.n_objects - lo for a in attrs])
    else:
        raise ValueError(f"unknown attribute {attribute!r}; pick one of {ATTRIBUTES}")
    if np.any(idx < 0) or np.any(idx >= len(labels)):
        raise ValueError(f"attribute value outside the {attribute} bin range")
    return labels, idx


def diagnose(
    preds: PredictionSet,
    labels: dict[str, LabelRecord],
    attributes: dict[str, EpisodeAttributes],
    attribute: str,
    *,
    grid: int = 6,
    slot_len: int = 30,
    frames: int = 300,
) -> DiagnosticReport:
    """Evaluate one prediction set inside each attribute bin.

    Empty bins are reported with a None metric rather than dropped, so gaps in
    the corpus stay visible.
    """
    ordered, recs = _aligned_scores(preds, labels)
    missing = [e for e in ordered.episode_ids if e not in attributes]
    if missing:
        raise ValueError(f"episodes missing attributes, e.g. {missing[0]!r}")
    attrs = [attributes[e] for e in ordered.episode_ids]
    bin_labels, bin_idx = _bin_assignments(
        attribute, attrs, grid=grid, slot_len=slot_len, frames=frames
    )

    if preds.task == "task3":
        truth = np.array([r.task3_cell(grid) for r in recs])
        correct = _rank_cells(ordered.scores)[:, 0] == truth
        overall = float(correct.mean() * 100.0)
        bins = []
        for b, label in enumerate(bin_labels):
            mask = bin_idx == b
            count = int(mask.sum())
            metric = float(correct[mask].mean() * 100.0) if count else None
            bins.append(BinStat(label, count, metric))
        metric_name = "top1"
    else:
        mat = np.stack(
            [r.task1_vector() if preds.task == "task1" else r.task2_vector() for r in recs]
        )
        _, overall = multilabel_ap(ordered.scores, mat)
        bins = []
        for b, label in enumerate(bin_labels):
            mask = bin_idx == b
            count = int(mask.sum())
            if count == 0:
                bins.append(BinStat(label, 0, None))
                continue
            try:
                _, mean_ap = multilabel_ap(ordered.scores[mask], mat[mask])
            except ValueError:
                mean_ap = None  # populated bin with no positive class at all
            bins.append(BinStat(label, count, mean_ap))
        metric_name = "mean_ap"

    return DiagnosticReport(
        task=preds.task,
        attribute=attribute,
        metric_name=metric_name,
        bins=bins,
        overall=overall,
        n_episodes=len(recs),
    )
