"""Pytest fixtures for Phase 4 tests: small networks over synthetic scenes."""

import numpy as np
import pytest

from phase1_data_pipeline.normalizer import filter_training
from phase1_data_pipeline.pipeline import export_expert_pairs
from phase1_data_pipeline.schema import DatasetManifest
from phase1_data_pipeline.synth import gen_scene, oracle_scanpath, synthetic_categories
from phase3_search_env.config import EnvConfig
from phase4_gail.config import NetworkConfig, PPOConfig, TrainerConfig
from phase4_gail.rollout import SearchTask
from phase4_gail.trainer import build_networks


@pytest.fixture
def small_config():
    return TrainerConfig(
        env=EnvConfig(feature_channels=8),
        network=NetworkConfig(trunk_channels=8, disc_channels=8),
        ppo=PPOConfig(episodes_per_iteration=4, minibatch_size=12, epochs=1, iterations=2, disc_batch_size=24),
    )


@pytest.fixture
def nets(small_config):
    return build_networks(small_config, seed=0)


@pytest.fixture
def scenes():
    return {seed: gen_scene(seed, seed % 2, True) for seed in range(4)}


@pytest.fixture
def images(scenes):
    by_ref = {s.ref: s.image for s in scenes.values()}
    return by_ref.__getitem__


@pytest.fixture
def tasks(scenes):
    return [
        SearchTask(key=s.ref, image=s.image, category=s.category_id, target_box=s.target_box)
        for s in scenes.values()
    ]


@pytest.fixture
def manifest(scenes):
    trials = [
        oracle_scanpath(s, rng=np.random.default_rng(seed), trial_id=f"train-{seed:05d}")
        for seed, s in scenes.items()
    ]
    return DatasetManifest(categories=synthetic_categories(), trials=trials)


@pytest.fixture
def pairs(manifest):
    return export_expert_pairs(filter_training(manifest))


@pytest.fixture
def state(nets, tasks):
    _, s = nets.env.reset(tasks[0].image, tasks[0].category)
    return s
