"""Shared fixtures: generated corpora at both action-budget settings.

The two disk corpora are full-scale and expensive, so they are session-scoped;
only the acceptance tests should depend on them. Unit tests use the small
in-memory episode pool.
"""

from __future__ import annotations

import pytest

from tabletop.corpus import generate_corpus, generate_episode, make_split
from tabletop.io import read_attributes, read_labels
from tabletop.world import CameraMode, SceneConfig

# Fixed seeds; every expected value in the suite was frozen against these.
KN_SEED = 101
K2_SEED = 202
POOL_SEED = 303

# Full-scale corpora. The random-baseline bands in the acceptance suite assume
# this size; mean AP only converges to mean prevalence once rare composite
# classes have enough positives.
KN_CORPUS_SIZE = 5500
K2_CORPUS_SIZE = 5500


@pytest.fixture(scope="session")
def k2_config() -> SceneConfig:
    return SceneConfig()


@pytest.fixture(scope="session")
def kn_config() -> SceneConfig:
    return SceneConfig(k_per_slot=None)


@pytest.fixture(scope="session")
def kn_corpus_dir(tmp_path_factory, kn_config):
    root = tmp_path_factory.mktemp("kn_corpus")
    generate_corpus(root, KN_CORPUS_SIZE, KN_SEED, kn_config)
    return root


@pytest.fixture(scope="session")
def kn_labels(kn_corpus_dir):
    return read_labels(kn_corpus_dir / "labels.jsonl")


@pytest.fixture(scope="session")
def kn_attributes(kn_corpus_dir):
    return read_attributes(kn_corpus_dir / "attributes.jsonl")


@pytest.fixture(scope="session")
def kn_split(kn_labels):
    return make_split(sorted(kn_labels), seed=KN_SEED)


@pytest.fixture(scope="session")
def k2_corpus_dir(tmp_path_factory, k2_config):
    root = tmp_path_factory.mktemp("k2_corpus")
    generate_corpus(root, K2_CORPUS_SIZE, K2_SEED, k2_config)
    return root


@pytest.fixture(scope="session")
def k2_labels(k2_corpus_dir):
    return read_labels(k2_corpus_dir / "labels.jsonl")


@pytest.fixture(scope="session")
def episode_pool(k2_config, kn_config):
    """A small mixed bag of in-memory episodes for unit and property tests."""
    moving_k2 = SceneConfig(camera_mode=CameraMode.MOVING)
    moving_kn = SceneConfig(k_per_slot=None, camera_mode=CameraMode.MOVING)
    pool = []
    for i in range(10):
        pool.append(generate_episode(POOL_SEED, i, k2_config))
        pool.append(generate_episode(POOL_SEED, 100 + i, kn_config))
        pool.append(generate_episode(POOL_SEED, 200 + i, moving_k2))
        pool.append(generate_episode(POOL_SEED, 300 + i, moving_kn))
    return pool
