"""File formats, corpus plumbing, and the command-line surface."""

import json
from pathlib import Path

import numpy as np
import pytest

from tabletop.cli import main
from tabletop.corpus import (
    generate_corpus,
    generate_episode,
    iter_episodes,
    make_split,
    read_manifest,
    rederive_labels,
)
from tabletop.evaluate import PredictionSet
from tabletop.io import (
    config_from_dict,
    config_to_dict,
    corpus_hash,
    episode_to_dict,
    read_attributes,
    read_episode,
    read_labels,
    read_predictions,
    read_split,
    write_attributes,
    write_episode,
    write_labels,
    write_predictions,
    write_split,
)
from tabletop.world import CameraMode, SceneConfig


def test_config_round_trip():
    for config in (
        SceneConfig(),
        SceneConfig(k_per_slot=None, camera_mode=CameraMode.MOVING),
        SceneConfig(n_objects_min=4, n_objects_max=6, grid_resolution=8),
    ):
        assert config_from_dict(config_to_dict(config)) == config
    assert config_to_dict(SceneConfig(k_per_slot=None))["k_per_slot"] == "all"


def test_episode_metadata_round_trip(tmp_path):
    res = generate_episode(11, 0, SceneConfig(camera_mode=CameraMode.MOVING))
    path = write_episode(res.metadata, tmp_path / "ep.json")
    back = read_episode(path)
    assert episode_to_dict(back) == episode_to_dict(res.metadata)
    assert back.episode_id == res.metadata.episode_id
    assert back.snitch_track == res.metadata.snitch_track


def test_stored_states_round_trip(tmp_path):
    res = generate_episode(11, 1, SceneConfig(), keep_states=True)
    back = read_episode(write_episode(res.metadata, tmp_path / "ep.json"))
    assert back.states is not None
    assert len(back.states) == 300
    for t in (0, 137, 299):
        assert back.states[t] == res.metadata.states[t]


def test_labels_round_trip(tmp_path):
    recs = [generate_episode(11, i, SceneConfig()).label for i in range(3)]
    path = write_labels(recs, tmp_path / "labels.jsonl")
    back = read_labels(path)
    assert set(back) == {r.episode_id for r in recs}
    for r in recs:
        assert back[r.episode_id] == r
        assert isinstance(next(iter(back[r.episode_id].task3)), int)


def test_attributes_round_trip(tmp_path):
    attrs = {}
    for i in range(3):
        res = generate_episode(11, i, SceneConfig())
        attrs[res.metadata.episode_id] = res.attributes
    path = write_attributes(attrs, tmp_path / "attributes.jsonl")
    assert read_attributes(path) == attrs


def test_predictions_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    preds = PredictionSet("task1", ("a", "b", "c"), rng.random((3, 14)))
    path = write_predictions(preds, tmp_path / "preds.jsonl")
    back = read_predictions(path)
    assert back.task == "task1"
    assert back.episode_ids == preds.episode_ids
    assert np.array_equal(back.scores, preds.scores)


def test_cell_predictions_expand_to_one_hot(tmp_path):
    path = tmp_path / "cells.jsonl"
    path.write_text(
        '{"episode_id":"a","task":"task3","cell":7}\n'
        '{"episode_id":"b","task":"task3","cell":35}\n'
    )
    got = read_predictions(path, task="task3", n_classes=36)
    assert got.scores.shape == (2, 36)
    assert got.scores[0, 7] == 1.0 and got.scores[0].sum() == 1.0
    assert got.scores[1, 35] == 1.0


def test_prediction_file_validation(tmp_path):
    p = tmp_path / "bad.jsonl"

    p.write_text('{"episode_id":"a","task":"task3","cell":99}\n')
    with pytest.raises(ValueError, match="out of range"):
        read_predictions(p, task="task3", n_classes=36)

    p.write_text('{"episode_id":"a","task":"task3","cell":7}\n')
    with pytest.raises(ValueError, match="n_classes"):
        read_predictions(p, task="task3")

    p.write_text('{"episode_id":"a","task":"task1","cell":7}\n')
    with pytest.raises(ValueError, match="only valid for task3"):
        read_predictions(p)

    p.write_text(
        '{"episode_id":"a","task":"task1","scores":[1,2]}\n'
        '{"episode_id":"b","task":"task2","scores":[1,2]}\n'
    )
    with pytest.raises(ValueError, match="mixed tasks"):
        read_predictions(p)
    # an explicit task filter skips foreign rows instead
    assert read_predictions(p, task="task1").episode_ids == ("a",)

    p.write_text(
        '{"episode_id":"a","task":"task1","scores":[1,2]}\n'
        '{"episode_id":"b","task":"task1","scores":[1,2,3]}\n'
    )
    with pytest.raises(ValueError, match="widths"):
        read_predictions(p)

    p.write_text("")
    with pytest.raises(ValueError, match="no predictions"):
        read_predictions(p)


def test_split_round_trip_and_properties(tmp_path):
    ids = [f"s0_e{i:05d}" for i in range(40)]
    split = make_split(ids, 17)
    assert sorted(split.train + split.val + split.test) == ids
    assert not set(split.train) & set(split.test)
    assert not set(split.train) & set(split.val)
    assert len(split.test) == round(40 * 0.3)
    assert len(split.val) == round((40 - 12) * 0.2)
    assert make_split(ids, 17) == split
    assert make_split(ids, 18) != split

    back = read_split(write_split(split, tmp_path / "split.json"))
    assert back == split
    assert back.subset("test") == split.test
    with pytest.raises(ValueError):
        back.subset("holdout")


def test_split_rejects_bad_input():
    with pytest.raises(ValueError, match="duplicate"):
        make_split(["a", "a", "b"], 0)
    with pytest.raises(ValueError, match="ratios"):
        make_split(["a", "b"], 0, test_ratio=1.0)
    with pytest.raises(ValueError, match="empty training"):
        make_split(["a", "b", "c"], 0, test_ratio=0.34, val_ratio=0.9)


def test_corpus_hash_tracks_content(tmp_path):
    (tmp_path / "sub").mkdir()
    (tmp_path / "a.txt").write_text("alpha")
    (tmp_path / "sub" / "b.txt").write_text("beta")
    h = corpus_hash(tmp_path)
    (tmp_path / "a.txt").write_text("alpha")
    assert corpus_hash(tmp_path) == h
    (tmp_path / "a.txt").write_text("alpha!")
    assert corpus_hash(tmp_path) != h


# -- corpus directories ------------------------------------------------------


@pytest.fixture(scope="module")
def cli_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("clic") / "corpus"
    rc = main(["generate", "--out", str(root), "--n", "8", "--seed", "7"])
    assert rc == 0
    return root


def test_generated_corpus_layout(cli_corpus):
    manifest = read_manifest(cli_corpus)
    assert manifest["n_episodes"] == 8
    assert len(manifest["episode_ids"]) == 8
    assert (cli_corpus / "labels.jsonl").is_file()
    assert (cli_corpus / "attributes.jsonl").is_file()
    vocab = json.loads((cli_corpus / "vocab.json").read_text())
    assert len(vocab["task1"]) == 14
    assert len(vocab["task2"]) == 301
    assert manifest["content_hash"] == corpus_hash(cli_corpus / "episodes")
    report = manifest["report"]
    assert report["total_actions"] > 0
    assert sum(report["cell_counts"]) == 8


def test_iter_episodes_order_and_filter(cli_corpus):
    manifest = read_manifest(cli_corpus)
    ids = [m.episode_id for m in iter_episodes(cli_corpus)]
    assert ids == manifest["episode_ids"]
    subset = manifest["episode_ids"][1:3]
    assert [m.episode_id for m in iter_episodes(cli_corpus, subset)] == subset


def test_rederive_matches_stored_labels(cli_corpus):
    records, attrs = rederive_labels(cli_corpus)
    stored = read_labels(cli_corpus / "labels.jsonl")
    assert {r.episode_id: r for r in records} == stored
    assert attrs == read_attributes(cli_corpus / "attributes.jsonl")


def test_worker_count_invisible_in_output(tmp_path):
    cfg = SceneConfig()
    generate_corpus(tmp_path / "w1", 6, 3, cfg, workers=1)
    generate_corpus(tmp_path / "w3", 6, 3, cfg, workers=3)
    a = read_manifest(tmp_path / "w1")
    b = read_manifest(tmp_path / "w3")
    assert a["content_hash"] == b["content_hash"]
    assert (tmp_path / "w1" / "labels.jsonl").read_bytes() == (
        tmp_path / "w3" / "labels.jsonl"
    ).read_bytes()


# -- CLI pipeline ------------------------------------------------------------


def _perfect_cell_file(corpus: Path, path: Path) -> Path:
    labels = read_labels(corpus / "labels.jsonl")
    with path.open("w") as fh:
        for eid in sorted(labels):
            row = {"episode_id": eid, "task": "task3", "cell": labels[eid].task3[6]}
            fh.write(json.dumps(row) + "\n")
    return path


def test_cli_split_and_eval(cli_corpus, tmp_path, capsys):
    assert main(["split", "--corpus", str(cli_corpus), "--seed", "5"]) == 0
    split = read_split(cli_corpus / "split.json")
    assert len(split.train) + len(split.val) + len(split.test) == 8

    pred = _perfect_cell_file(cli_corpus, tmp_path / "cells.jsonl")
    out = tmp_path / "report.json"
    rc = main([
        "eval",
        "--labels", str(cli_corpus / "labels.jsonl"),
        "--pred", str(pred),
        "--task", "task3",
        "--out", str(out),
    ])
    assert rc == 0
    report = json.loads(out.read_text())
    assert report["top1"] == 100.0
    assert report["mean_l1"] == 0.0
    assert "top1 100.0" in capsys.readouterr().out

    rc = main([
        "eval",
        "--labels", str(cli_corpus / "labels.jsonl"),
        "--pred", str(pred),
        "--task", "task3",
        "--split", str(cli_corpus / "split.json"),
        "--subset", "test",
        "--out", str(out),
    ])
    assert rc == 0
    assert json.loads(out.read_text())["n_episodes"] == len(split.test)


def test_cli_labels_rewrite(cli_corpus):
    before = (cli_corpus / "labels.jsonl").read_bytes()
    assert main(["labels", "--corpus", str(cli_corpus)]) == 0
    assert (cli_corpus / "labels.jsonl").read_bytes() == before


def test_cli_diagnose(cli_corpus, tmp_path):
    pred = _perfect_cell_file(cli_corpus, tmp_path / "cells.jsonl")
    out = tmp_path / "diag.json"
    rc = main([
        "diagnose",
        "--labels", str(cli_corpus / "labels.jsonl"),
        "--pred", str(pred),
        "--task", "task3",
        "--attributes", str(cli_corpus / "attributes.jsonl"),
        "--attribute", "contained_at_end",
        "--out", str(out),
    ])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["overall"] == 100.0
    assert sum(b["count"] for b in doc["bins"]) == 8


def test_cli_baseline_random(cli_corpus, tmp_path):
    out = tmp_path / "rand.json"
    rc = main([
        "baseline-random",
        "--labels", str(cli_corpus / "labels.jsonl"),
        "--task", "task3",
        "--trials", "30",
        "--out", str(out),
    ])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["closed_top1"] == pytest.approx(100 / 36)
    assert 0.0 <= doc["top1"] <= 30.0


def test_cli_export_tracks(cli_corpus):
    rc = main(["export-tracks", "--corpus", str(cli_corpus)])
    assert rc == 0
    lines = (cli_corpus / "tracks.jsonl").read_text().splitlines()
    assert len(lines) == 8
    doc = json.loads(lines[0])
    assert doc["image_size"] == [320, 240]
    assert len(doc["snitch"]) == 300
    assert len(doc["init_box"]) == 4


def test_cli_viz(cli_corpus, tmp_path):
    eid = read_manifest(cli_corpus)["episode_ids"][0]
    out = tmp_path / "scene.png"
    rc = main(["viz", "--corpus", str(cli_corpus), "--id", eid, "--out", str(out)])
    assert rc == 0
    assert out.stat().st_size > 0
    strip = tmp_path / "strip.png"
    rc = main([
        "viz", "--corpus", str(cli_corpus), "--id", eid,
        "--strip", "--every", "100", "--out", str(strip),
    ])
    assert rc == 0
    assert strip.stat().st_size > 0


def test_cli_exit_codes(cli_corpus, tmp_path):
    # missing file -> 3
    rc = main([
        "eval", "--labels", str(tmp_path / "nope.jsonl"),
        "--pred", str(tmp_path / "nope2.jsonl"), "--task", "task3",
    ])
    assert rc == 3

    # malformed json -> 3
    bad = tmp_path / "garbage.jsonl"
    bad.write_text("not json at all\n")
    rc = main([
        "eval", "--labels", str(cli_corpus / "labels.jsonl"),
        "--pred", str(bad), "--task", "task3",
    ])
    assert rc == 3

    # ghost episode in predictions -> 2
    ghost = tmp_path / "ghost.jsonl"
    ghost.write_text('{"episode_id":"s9_e99999","task":"task3","cell":0}\n')
    rc = main([
        "eval", "--labels", str(cli_corpus / "labels.jsonl"),
        "--pred", str(ghost), "--task", "task3",
    ])
    assert rc == 2

    # viz without a target -> 2
    assert main(["viz", "--corpus", str(cli_corpus)]) == 2
