"""Pytest fixtures for Phase 5 tests: hand-built trials and a small synthetic test set."""

import numpy as np
import pytest

from phase1_data_pipeline.schema import DatasetManifest, ImageRef, SearchTrial
from phase1_data_pipeline.synth import gen_scene, oracle_scanpath, synthetic_categories
from phase3_search_env.config import EnvConfig
from phase4_gail.config import NetworkConfig, TrainerConfig
from phase4_gail.trainer import build_networks
from phase5_metrics.config import MetricConfig


@pytest.fixture
def make_trial():
    """Build a SearchTrial from (x, y) fixations; the first one is the start."""

    def _make(
        fixations,
        target_box=(40.0, 40.0, 40.0, 40.0),
        trial_id="t1",
        subject_id="s1",
        ref="img.png",
        category_id=0,
        correct=True,
        other_boxes=None,
        width=512,
        height=320,
    ):
        return SearchTrial(
            trial_id=trial_id,
            subject_id=subject_id,
            image=ImageRef(ref=ref, width=width, height=height),
            category_id=category_id,
            condition="tp" if target_box is not None else "ta",
            correct=correct,
            target_box=target_box,
            fixations=[list(p) for p in fixations],
            other_boxes=other_boxes or {},
        )

    return _make


@pytest.fixture
def metric_config():
    return MetricConfig(auc_negatives=2000, shuffle_permutations=10)


@pytest.fixture
def nets():
    config = TrainerConfig(env=EnvConfig(feature_channels=8), network=NetworkConfig(trunk_channels=8, disc_channels=8))
    return build_networks(config, seed=0)


@pytest.fixture
def scenes():
    """Two TP scenes per category plus one TA scene."""
    out = {seed: gen_scene(seed, seed % 2, True) for seed in range(100, 104)}
    out[104] = gen_scene(104, 0, False)
    return out


@pytest.fixture
def images(scenes):
    return {s.ref: s.image for s in scenes.values()}.__getitem__


@pytest.fixture
def eval_manifest(scenes):
    """Three oracle subjects per scene."""
    trials = [
        oracle_scanpath(
            scene,
            rng=np.random.default_rng(seed * 10 + s),
            trial_id=f"test-{seed}-{s}",
            subject_id=f"subject-{s}",
        )
        for seed, scene in scenes.items()
        for s in range(3)
    ]
    return DatasetManifest(categories=synthetic_categories(), split="test", trials=trials)
