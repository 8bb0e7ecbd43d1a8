"""
Phase 4: Adversarial imitation of search scanpaths.

Actor-critic generator and discriminator networks, rollout collection,
advantage estimation, PPO and the GAIL training loop.
"""

from .adversary import DiscStats, PairBatch, discriminator_update, gail_reward
from .agent import (
    ActorCritic,
    Discriminator,
    PolicyOutput,
    discriminator_score,
    greedy_action,
    inhibition_mask,
    policy_forward,
    saccade_map,
    sample_action,
)
from .config import NetworkConfig, PPOConfig, TrainerConfig, named_rng
from .errors import ConfigError, DivergenceError
from .ppo import Batch, PPOStats, ppo_update
from .rollout import SearchTask, Trajectory, collect_rollouts, compute_gae, normalize_advantages
from .trainer import TrainReport, TrainResult, build_networks, build_tasks, load_networks, train

__all__ = [
    "ActorCritic",
    "Batch",
    "ConfigError",
    "DiscStats",
    "Discriminator",
    "DivergenceError",
    "NetworkConfig",
    "PPOConfig",
    "PPOStats",
    "PairBatch",
    "PolicyOutput",
    "SearchTask",
    "TrainReport",
    "TrainResult",
    "TrainerConfig",
    "Trajectory",
    "build_networks",
    "build_tasks",
    "collect_rollouts",
    "compute_gae",
    "discriminator_score",
    "discriminator_update",
    "gail_reward",
    "greedy_action",
    "inhibition_mask",
    "load_networks",
    "named_rng",
    "normalize_advantages",
    "policy_forward",
    "ppo_update",
    "saccade_map",
    "sample_action",
    "train",
]
