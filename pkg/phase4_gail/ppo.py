"""
PPO update of the actor-critic with the clipped surrogate objective.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from phase1_data_pipeline.normalizer import N_ACTIONS
from phase2_numerics import ops
from phase2_numerics.optim import Adam
from phase2_numerics.tensor import Tape, Tensor

from .agent import MASKED_LOGIT, ActorCritic
from .config import PPOConfig
from .rollout import Trajectory, compute_gae, normalize_advantages

logger = logging.getLogger(__name__)


@dataclass
class Batch:
    """Flattened steps of scored trajectories, ready for minibatching."""

    pooled: np.ndarray
    planes: np.ndarray
    actions: np.ndarray
    old_log_probs: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray
    masks: np.ndarray

    def __len__(self) -> int:
        return int(self.actions.shape[0])

    @classmethod
    def from_trajectories(
        cls, trajectories: Sequence[Trajectory], gamma: float, lam: float, normalize: bool = True
    ) -> "Batch":
        """
        Raises:
            ValueError: no steps, or a trajectory without rewards.
        """
        steps = [s for t in trajectories for s in t.states]
        if not steps:
            raise ValueError("cannot build a PPO batch from zero steps")
        advantages, returns = [], []
        for traj in trajectories:
            adv, ret = compute_gae(traj, gamma, lam)
            advantages.append(adv)
            returns.append(ret)
        adv = np.concatenate(advantages)
        masks = np.ones((len(steps), N_ACTIONS), dtype=bool)
        row = 0
        for traj in trajectories:
            for mask in traj.masks:
                if mask is not None:
                    masks[row] = mask
                row += 1
        return cls(
            pooled=np.stack([s.pooled for s in steps]).astype(np.float32),
            planes=np.stack([s.planes() for s in steps]).astype(np.float32),
            actions=np.array([a for t in trajectories for a in t.actions], dtype=np.int64),
            old_log_probs=np.array([lp for t in trajectories for lp in t.log_probs], dtype=np.float64),
            advantages=normalize_advantages(adv) if normalize else adv,
            returns=np.concatenate(returns),
            masks=masks,
        )


@dataclass
class PPOStats:
    policy_loss: float
    value_loss: float
    entropy: float
    approx_kl: float
    clip_fraction: float
    initial_ratio_error: float


@dataclass
class Optimizers:
    policy: Adam
    value: Adam

    @classmethod
    def build(cls, agent: ActorCritic, config: PPOConfig) -> "Optimizers":
        return cls(
            policy=Adam(agent.head_parameters, lr=config.lr_policy, max_grad_norm=config.grad_clip),
            value=Adam(agent.value_parameters, lr=config.lr_value, max_grad_norm=config.grad_clip),
        )


def clipped_surrogate(log_probs: Tensor, old_log_probs: np.ndarray, advantages: np.ndarray, clip_eps: float) -> Tensor:
    """Mean of min(r * A, clip(r, 1 - eps, 1 + eps) * A) with r = exp(log_probs - old_log_probs)."""
    ratio = ops.exp(ops.sub(log_probs, old_log_probs.astype(np.float32)))
    adv = advantages.astype(np.float32)
    unclipped = ops.mul(ratio, adv)
    clipped = ops.mul(ops.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps), adv)
    return ops.mean(ops.minimum(unclipped, clipped))


def ppo_update(
    agent: ActorCritic,
    batch: Batch,
    config: PPOConfig,
    optimizers: Optimizers,
    rng: np.random.Generator,
) -> PPOStats:
    """
    `config.epochs` passes over shuffled minibatches. Pooled ReT-images are
    re-encoded through the extractor so it is trained by the same loss.

    Raises:
        NonFiniteError: a loss or gradient went non-finite.
    """
    n = len(batch)
    mask_bias = np.where(batch.masks, 0.0, MASKED_LOGIT).astype(np.float32)
    params = agent.parameters
    totals = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0, "approx_kl": 0.0, "clip_fraction": 0.0}
    updates = 0
    initial_ratio_error = 0.0
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.minibatch_size):
            idx = order[start : start + config.minibatch_size]
            with Tape() as tape:
                feats = agent.extractor(Tensor(batch.pooled[idx]))
                logits, values = agent.forward_batch(feats, batch.planes[idx])
                log_probs_all = ops.log_softmax(ops.add(logits, mask_bias[idx]))
                log_probs = ops.gather(log_probs_all, batch.actions[idx])
                surrogate = clipped_surrogate(log_probs, batch.old_log_probs[idx], batch.advantages[idx], config.clip_eps)
                policy_loss = ops.mul(surrogate, -1.0)
                value_loss = ops.mean(ops.square(ops.sub(values, batch.returns[idx].astype(np.float32))))
                entropy = ops.mul(
                    ops.mean(ops.sum(ops.mul(ops.exp(log_probs_all), log_probs_all), axis=1)), -1.0
                )
                loss = ops.sub(
                    ops.add(policy_loss, ops.mul(value_loss, config.value_coef)),
                    ops.mul(entropy, config.entropy_coef),
                )
            grads = tape.gradient(loss, params)
            optimizers.policy.step(grads)
            optimizers.value.step(grads)

            log_ratio = log_probs.numpy().astype(np.float64) - batch.old_log_probs[idx]
            ratio = np.exp(log_ratio)
            if epoch == 0 and start == 0:
                initial_ratio_error = float(np.abs(ratio - 1.0).max())
            totals["policy_loss"] += policy_loss.item()
            totals["value_loss"] += value_loss.item()
            totals["entropy"] += entropy.item()
            totals["approx_kl"] += float(np.mean((ratio - 1.0) - log_ratio))
            totals["clip_fraction"] += float(np.mean(np.abs(ratio - 1.0) > config.clip_eps))
            updates += 1
    stats = PPOStats(**{k: v / max(updates, 1) for k, v in totals.items()}, initial_ratio_error=initial_ratio_error)
    logger.debug(
        "ppo_update: %d steps, %d updates, policy_loss=%.4f value_loss=%.4f entropy=%.3f",
        n,
        updates,
        stats.policy_loss,
        stats.value_loss,
        stats.entropy,
    )
    return stats
