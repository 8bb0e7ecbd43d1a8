"""Pytest fixtures for Phase 3 tests."""

import numpy as np
import pytest

from phase3_search_env.config import EnvConfig, FoveationConfig
from phase3_search_env.env import SearchEnv
from phase3_search_env.features import Extractor


@pytest.fixture
def fov():
    return FoveationConfig()


@pytest.fixture
def random_image():
    return np.random.default_rng(3).random((320, 512, 3)).astype(np.float32)


@pytest.fixture
def env_config():
    return EnvConfig(feature_channels=8)


@pytest.fixture
def extractor(env_config):
    return Extractor(env_config, np.random.default_rng(0))


@pytest.fixture
def env(extractor, env_config):
    return SearchEnv(extractor, env_config)
