"""
Rollout collection and advantage estimation.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from phase1_data_pipeline.schema import Box
from phase2_numerics.errors import NumericsError
from phase3_search_env.env import SearchEnv, State
from phase3_search_env.errors import EpisodeError
from phase3_search_env.retina import Point

from .agent import ActorCritic, greedy_action, sample_action

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchTask:
    """One image-category pairing episodes are drawn from; the box is in canvas pixels."""

    key: str
    image: np.ndarray
    category: int
    target_box: Optional[Box] = None
    trial_id: Optional[str] = None


@dataclass
class Trajectory:
    """
    One episode. Step t holds the State the action was chosen in; rewards stay
    None until the discriminator has scored the episode.
    """

    episode_id: int
    task_index: int
    states: list[State] = field(default_factory=list)
    actions: list[int] = field(default_factory=list)
    log_probs: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    masks: list[Optional[np.ndarray]] = field(default_factory=list)
    hits: list[bool] = field(default_factory=list)
    fixations: list[Point] = field(default_factory=list)
    rewards: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def dones(self) -> np.ndarray:
        d = np.zeros(len(self), dtype=bool)
        if len(self):
            d[-1] = True
        return d

    @property
    def first_hit(self) -> Optional[int]:
        """1-based saccade index of the first target hit, or None."""
        for k, hit in enumerate(self.hits, start=1):
            if hit:
                return k
        return None


def run_episode(
    env: SearchEnv,
    policy: ActorCritic,
    task: SearchTask,
    rng: np.random.Generator,
    episode_id: int = 0,
    task_index: int = 0,
    greedy: bool = False,
) -> Trajectory:
    episode, state = env.reset(task.image, task.category, task.target_box, key=task.key)
    traj = Trajectory(episode_id=episode_id, task_index=task_index, fixations=list(episode.fixations))
    done = False
    while not done:
        output = policy(state)
        mask = env.action_mask(episode)
        action, log_prob = greedy_action(output, mask) if greedy else sample_action(output, rng, mask)
        next_state, hit, done = env.step(episode, action)
        traj.states.append(state)
        traj.actions.append(action)
        traj.log_probs.append(log_prob)
        traj.values.append(output.value)
        traj.masks.append(mask)
        traj.hits.append(hit)
        traj.fixations.append(episode.fixations[-1])
        state = next_state
    return traj


def collect_rollouts(
    env: SearchEnv,
    policy: ActorCritic,
    tasks: Sequence[SearchTask],
    n_episodes: int,
    rng: np.random.Generator,
    jobs: int = 1,
    greedy: bool = False,
    task_indices: Optional[Sequence[int]] = None,
) -> list[Trajectory]:
    """
    Run `n_episodes` episodes on tasks drawn uniformly (or the given
    `task_indices`). Task choice and per-episode seeds are drawn up front, so
    results do not depend on `jobs`.

    Raises:
        EpisodeError: an episode failed; the message names its id.
    """
    if not tasks:
        raise ValueError("collect_rollouts needs at least one task")
    if task_indices is None:
        task_indices = rng.integers(len(tasks), size=n_episodes).tolist()
    elif len(task_indices) != n_episodes:
        raise ValueError(f"{len(task_indices)} task indices for {n_episodes} episodes")
    seeds = rng.integers(0, 2**63 - 1, size=n_episodes, dtype=np.int64).tolist()

    def one(i: int) -> Trajectory:
        try:
            return run_episode(
                env, policy, tasks[task_indices[i]], np.random.default_rng(seeds[i]), i, task_indices[i], greedy
            )
        except (EpisodeError, NumericsError, ValueError) as e:
            raise EpisodeError(f"episode {i} (task {task_indices[i]}): {e}") from e

    if jobs > 1 and n_episodes > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            trajectories = list(pool.map(one, range(n_episodes)))
    else:
        trajectories = [one(i) for i in range(n_episodes)]
    logger.debug(
        "collect_rollouts: [audit] %d episodes, %d steps, jobs=%d",
        len(trajectories),
        sum(len(t) for t in trajectories),
        jobs,
    )
    return trajectories


def gae(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Generalized advantage estimates over a step sequence; the value after a
    terminal step is 0.

    Returns:
        (advantages, returns) with returns = advantages + values.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    if not (rewards.shape == values.shape == dones.shape):
        raise ValueError(f"rewards {rewards.shape}, values {values.shape}, dones {dones.shape} differ")
    n = rewards.shape[0]
    advantages = np.zeros(n)
    running = 0.0
    for t in reversed(range(n)):
        live = 0.0 if dones[t] else 1.0
        next_value = values[t + 1] if t + 1 < n else 0.0
        delta = rewards[t] + gamma * next_value * live - values[t]
        running = delta + gamma * lam * live * running
        advantages[t] = running
    return advantages, advantages + values


def compute_gae(traj: Trajectory, gamma: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Raises:
        ValueError: the trajectory has not been scored.
    """
    if traj.rewards is None:
        raise ValueError(f"episode {traj.episode_id} has no rewards; score it before computing advantages")
    return gae(traj.rewards, np.asarray(traj.values), traj.dones, gamma, lam)


def normalize_advantages(advantages: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    """Shift to mean 0 and scale to std 1 (shift only when the spread is zero)."""
    adv = np.asarray(advantages, dtype=np.float64)
    if adv.size == 0:
        return adv
    centered = adv - adv.mean()
    std = centered.std()
    return centered if std < eps else centered / (std + eps)


def hit_curve(trajectories: Sequence[Trajectory], n_saccades: int = 6) -> np.ndarray:
    """curve[k-1]: fraction of episodes whose target was hit within k saccades."""
    if not trajectories:
        return np.zeros(n_saccades)
    firsts = np.array([t.first_hit or n_saccades + 1 for t in trajectories])
    return np.array([(firsts <= k).mean() for k in range(1, n_saccades + 1)])
