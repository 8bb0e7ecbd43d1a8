"""Tests for rollout collection and advantage estimation."""

import numpy as np
import pytest
from scipy import stats

from phase3_search_env.errors import EpisodeError
from phase4_gail.rollout import (
    SearchTask,
    Trajectory,
    collect_rollouts,
    compute_gae,
    gae,
    hit_curve,
    normalize_advantages,
)


def _brute_force_gae(rewards, values, gamma, lam):
    n = len(rewards)
    v = list(values) + [0.0]
    deltas = [rewards[t] + gamma * v[t + 1] - v[t] for t in range(n)]
    return np.array([sum((gamma * lam) ** k * deltas[t + k] for k in range(n - t)) for t in range(n)])


def _episode(rewards, values):
    traj = Trajectory(episode_id=0, task_index=0)
    traj.actions = list(range(len(rewards)))
    traj.values = list(values)
    traj.rewards = np.asarray(rewards, dtype=np.float64)
    return traj


class TestGae:
    def test_undiscounted_sums(self):
        adv, ret = compute_gae(_episode([1.0, 0.0, 0.0], [0.0, 0.0, 0.0]), gamma=1.0, lam=1.0)
        np.testing.assert_allclose(adv, [1.0, 0.0, 0.0])
        np.testing.assert_allclose(ret, adv)

    def test_gamma_zero(self):
        rewards, values = [0.5, -1.0, 2.0], [0.1, 0.2, 0.3]
        adv, _ = compute_gae(_episode(rewards, values), gamma=0.0, lam=0.95)
        np.testing.assert_allclose(adv, np.array(rewards) - np.array(values))

    def test_matches_direct_summation(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            rewards = rng.normal(size=6)
            values = rng.normal(size=6)
            gamma, lam = rng.uniform(0, 1), rng.uniform(0, 1)
            adv, ret = compute_gae(_episode(rewards, values), gamma, lam)
            np.testing.assert_allclose(adv, _brute_force_gae(rewards, values, gamma, lam), atol=1e-6)
            np.testing.assert_allclose(ret, adv + values, atol=1e-12)

    def test_terminal_cuts_bootstrap(self):
        rewards = np.array([1.0, 1.0, 1.0, 1.0])
        values = np.array([0.0, 5.0, 0.0, 5.0])
        dones = np.array([False, True, False, True])
        adv, _ = gae(rewards, values, dones, 1.0, 1.0)
        np.testing.assert_allclose(adv[:2], _brute_force_gae(rewards[:2], values[:2], 1.0, 1.0))
        np.testing.assert_allclose(adv[2:], _brute_force_gae(rewards[2:], values[2:], 1.0, 1.0))

    def test_missing_rewards(self):
        traj = _episode([0.0], [0.0])
        traj.rewards = None
        with pytest.raises(ValueError, match="no rewards"):
            compute_gae(traj, 1.0, 0.95)


class TestNormalizeAdvantages:
    def test_moments(self):
        adv = normalize_advantages(np.random.default_rng(1).normal(3.0, 7.0, size=240))
        assert abs(adv.mean()) < 1e-6
        assert abs(adv.std() - 1.0) < 1e-3

    def test_constant_input(self):
        np.testing.assert_array_equal(normalize_advantages(np.full(6, 2.5)), np.zeros(6))


class TestCollectRollouts:
    def test_six_steps_per_episode(self, nets, tasks):
        trajs = collect_rollouts(nets.env, nets.policy, tasks, 10, np.random.default_rng(0))
        assert len(trajs) == 10
        assert sum(len(t) for t in trajs) == 60
        for t in trajs:
            assert len(t.fixations) == 7
            assert t.dones.tolist() == [False] * 5 + [True]
            assert [s.step for s in t.states] == list(range(6))
            assert all(0 <= a < 160 for a in t.actions)
            assert t.rewards is None

    def test_seeded_rerun_identical(self, nets, tasks):
        a = collect_rollouts(nets.env, nets.policy, tasks, 5, np.random.default_rng(7))
        b = collect_rollouts(nets.env, nets.policy, tasks, 5, np.random.default_rng(7))
        assert [t.actions for t in a] == [t.actions for t in b]
        assert [t.log_probs for t in a] == [t.log_probs for t in b]

    def test_parallel_matches_serial(self, nets, tasks):
        a = collect_rollouts(nets.env, nets.policy, tasks, 6, np.random.default_rng(3), jobs=1)
        b = collect_rollouts(nets.env, nets.policy, tasks, 6, np.random.default_rng(3), jobs=3)
        assert [t.actions for t in a] == [t.actions for t in b]
        assert [t.task_index for t in a] == [t.task_index for t in b]

    def test_failure_names_episode(self, nets, tasks):
        broken = [SearchTask(key="broken", image=np.zeros(3), category=0)]
        with pytest.raises(EpisodeError, match="episode 0"):
            collect_rollouts(nets.env, nets.policy, broken, 2, np.random.default_rng(0))

    def test_no_tasks(self, nets):
        with pytest.raises(ValueError):
            collect_rollouts(nets.env, nets.policy, [], 1, np.random.default_rng(0))

    def test_greedy_episodes_are_deterministic(self, nets, tasks):
        a = collect_rollouts(nets.env, nets.policy, tasks, 2, np.random.default_rng(1), greedy=True, task_indices=[0, 0])
        assert a[0].actions == a[1].actions

    @pytest.mark.slow
    def test_untrained_actions_near_uniform(self, nets, tasks):
        trajs = collect_rollouts(nets.env, nets.policy, tasks, 1667, np.random.default_rng(0), jobs=4)
        counts = np.bincount([a for t in trajs for a in t.actions], minlength=160)
        assert stats.chisquare(counts).pvalue > 0.01


def test_hit_curve():
    def traj(hits):
        t = Trajectory(episode_id=0, task_index=0)
        t.actions = [0] * 6
        t.hits = hits
        return t

    trajs = [traj([False, True] + [False] * 4), traj([True] * 6), traj([False] * 6)]
    curve = hit_curve(trajs)
    np.testing.assert_allclose(curve, [1 / 3, 2 / 3, 2 / 3, 2 / 3, 2 / 3, 2 / 3])
    assert trajs[0].first_hit == 2
    assert trajs[2].first_hit is None
