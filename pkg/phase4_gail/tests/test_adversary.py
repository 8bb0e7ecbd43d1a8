"""Tests for the GAIL reward and the discriminator update."""

import math

import numpy as np
import pytest

from phase2_numerics.optim import Adam
from phase4_gail.adversary import PairBatch, discriminator_accuracy, discriminator_update, gail_reward


class TestGailReward:
    def test_values(self):
        assert gail_reward(0.5) == pytest.approx(-0.6931, abs=1e-4)
        assert gail_reward(1e-6) == pytest.approx(-13.8155, abs=1e-4)
        assert -1e-5 < gail_reward(1 - 1e-6) < 0

    def test_clamped_bounds(self):
        rewards = gail_reward(np.array([0.0, 1.0, 0.3]))
        assert np.all(rewards >= math.log(1e-6)) and np.all(rewards <= 0)

    def test_variant(self):
        assert gail_reward(0.5, "neg_log_one_minus_d") == pytest.approx(math.log(2))
        with pytest.raises(ValueError):
            gail_reward(0.5, "other")


def _pairs(rng, n, value=None, channels=8, k=2):
    feats = rng.random((n, channels, 10, 16)).astype(np.float32) if value is None else np.full(
        (n, channels, 10, 16), value, dtype=np.float32
    )
    planes = np.zeros((n, k + 1, 10, 16), dtype=np.float32)
    planes[:, 0] = 1.0
    return PairBatch(features=feats, planes=planes, actions=rng.integers(160, size=n))


class TestDiscriminatorUpdate:
    def test_initial_loss_near_ln2(self, nets):
        rng = np.random.default_rng(0)
        disc = nets.discriminator
        stats = discriminator_update(disc, Adam(disc.parameters, lr=0.0), _pairs(rng, 64), _pairs(rng, 64), rng)
        assert stats.loss == pytest.approx(math.log(2), abs=0.05)

    def test_separable_pairs(self, nets):
        rng = np.random.default_rng(1)
        disc = nets.discriminator
        expert, generated = _pairs(rng, 64, value=1.0), _pairs(rng, 64, value=0.0)
        optimizer = Adam(disc.parameters, lr=1e-2)
        for _ in range(200):
            discriminator_update(disc, optimizer, expert, generated, rng)
            if discriminator_accuracy(disc, expert, generated) > 0.95:
                break
        assert discriminator_accuracy(disc, expert, generated) > 0.95

    def test_identical_distributions(self, nets):
        rng = np.random.default_rng(2)
        disc = nets.discriminator
        optimizer = Adam(disc.parameters, lr=1e-3)
        for _ in range(100):
            discriminator_update(disc, optimizer, _pairs(rng, 32), _pairs(rng, 32), rng)
        held_out = discriminator_accuracy(disc, _pairs(rng, 500), _pairs(rng, 500))
        assert abs(held_out - 0.5) <= 0.1

    def test_balanced_minibatch(self, nets):
        rng = np.random.default_rng(3)
        disc = nets.discriminator
        stats = discriminator_update(disc, Adam(disc.parameters), _pairs(rng, 10), _pairs(rng, 40), rng, batch_size=8)
        assert 0.0 <= stats.accuracy <= 1.0
        assert 0.0 < stats.expert_score < 1.0

    def test_empty_batch(self, nets):
        rng = np.random.default_rng(4)
        empty = PairBatch(np.zeros((0, 8, 10, 16), np.float32), np.zeros((0, 3, 10, 16), np.float32), np.zeros(0, np.int64))
        with pytest.raises(ValueError):
            discriminator_update(nets.discriminator, Adam(nets.discriminator.parameters), empty, _pairs(rng, 4), rng)
