"""Attribute-binned evaluation slices."""

import numpy as np
import pytest

from tabletop.diagnostics import ATTRIBUTES, diagnose
from tabletop.evaluate import PredictionSet
from tabletop.labels import LabelRecord
from tabletop.simulate import EpisodeAttributes


def _attrs(last_move=100, contained=False, depth=0, disp=2, n_objects=7):
    return EpisodeAttributes(last_move, contained, depth, disp, n_objects)


def _record(eid: str, cell6: int) -> LabelRecord:
    return LabelRecord(eid, (0,), (0,), {4: cell6 % 16, 6: cell6, 8: cell6 % 64}, 6)


def _corpus(n=24, seed=5):
    """Synthetic task3 corpus with a known per-episode hit pattern."""
    rng = np.random.default_rng(seed)
    labels, attrs, rows = {}, {}, {}
    for i in range(n):
        eid = f"e{i:03d}"
        cell = int(rng.integers(36))
        labels[eid] = _record(eid, cell)
        attrs[eid] = _attrs(
            last_move=int(rng.integers(300)),
            contained=bool(i % 3 == 0),
            disp=int(rng.integers(11)),
            n_objects=int(rng.integers(5, 11)),
        )
        rows[eid] = cell  # perfect prediction
    ids = tuple(labels)
    scores = np.zeros((n, 36))
    for i, e in enumerate(ids):
        scores[i, rows[e]] = 1.0
    return PredictionSet("task3", ids, scores), labels, attrs


def test_perfect_predictor_is_perfect_in_every_populated_bin():
    preds, labels, attrs = _corpus()
    for attribute in ATTRIBUTES:
        rep = diagnose(preds, labels, attrs, attribute)
        assert rep.overall == 100.0
        for b in rep.bins:
            if b.count:
                assert b.metric == 100.0
            else:
                assert b.metric is None


def test_bin_populations_partition_the_corpus():
    preds, labels, attrs = _corpus()
    for attribute in ATTRIBUTES:
        rep = diagnose(preds, labels, attrs, attribute)
        assert sum(b.count for b in rep.bins) == rep.n_episodes == len(labels)


def test_last_move_bins_follow_slots():
    preds, labels, attrs = _corpus(n=4)
    for eid, frame in zip(attrs, (0, 29, 30, 299)):
        a = attrs[eid]
        attrs[eid] = EpisodeAttributes(
            frame, a.contained_at_end, a.containment_depth,
            a.displacement_cells, a.n_objects,
        )
    rep = diagnose(preds, labels, attrs, "last_move_frame")
    assert len(rep.bins) == 10
    assert rep.bins[0].label == "[0,30)"
    assert rep.bins[0].count == 2
    assert rep.bins[1].count == 1
    assert rep.bins[9].count == 1


def test_contained_at_end_binning():
    preds, labels, attrs = _corpus()
    rep = diagnose(preds, labels, attrs, "contained_at_end")
    assert [b.label for b in rep.bins] == ["visible", "contained"]
    n_contained = sum(a.contained_at_end for a in attrs.values())
    assert rep.bins[1].count == n_contained
    assert rep.bins[0].count == len(attrs) - n_contained


def test_displacement_bins_span_grid_diameter():
    preds, labels, attrs = _corpus()
    rep = diagnose(preds, labels, attrs, "displacement_cells", grid=6)
    assert [b.label for b in rep.bins] == [str(d) for d in range(11)]


def test_mixed_predictor_recomposes():
    # hits only in even episodes; bin metrics must average the right subsets
    preds, labels, attrs = _corpus()
    scores = preds.scores.copy()
    for i in range(1, len(preds.episode_ids), 2):
        truth = labels[preds.episode_ids[i]].task3[6]
        scores[i] = 0.0
        scores[i, (truth + 1) % 36] = 1.0
    wrong = PredictionSet("task3", preds.episode_ids, scores)
    rep = diagnose(wrong, labels, attrs, "contained_at_end")
    hits = {
        e: preds.episode_ids.index(e) % 2 == 0 for e in preds.episode_ids
    }
    for b, flag in zip(rep.bins, (False, True)):
        sub = [hits[e] for e in preds.episode_ids if attrs[e].contained_at_end is flag]
        assert b.count == len(sub)
        assert b.metric == pytest.approx(np.mean(sub) * 100.0)
    assert rep.overall == pytest.approx(50.0)


def test_multilabel_bins_use_mean_ap():
    rng = np.random.default_rng(9)
    labels, attrs = {}, {}
    for i in range(30):
        eid = f"e{i:03d}"
        bits = tuple(int(b) for b in np.flatnonzero(rng.random(14) < 0.5)) or (0,)
        labels[eid] = LabelRecord(eid, bits, (0,), {6: 0}, 6)
        attrs[eid] = _attrs(contained=bool(i % 2))
    ids = tuple(labels)
    perfect = np.stack([labels[e].task1_vector().astype(float) for e in ids])
    rep = diagnose(PredictionSet("task1", ids, perfect), labels, attrs, "contained_at_end")
    assert rep.metric_name == "mean_ap"
    assert rep.overall == 100.0
    assert all(b.metric == 100.0 for b in rep.bins if b.count)


def test_diagnose_input_validation():
    preds, labels, attrs = _corpus(n=6)
    with pytest.raises(ValueError):
        diagnose(preds, labels, attrs, "not_an_attribute")
    short = dict(list(attrs.items())[:-1])
    with pytest.raises(ValueError):
        diagnose(preds, labels, short, "n_objects")
