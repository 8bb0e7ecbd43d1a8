"""
Discriminator-side operations: the GAIL reward and the balanced BCE update.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from phase2_numerics import ops
from phase2_numerics.optim import Adam
from phase2_numerics.tensor import Tape
from phase3_search_env.env import State

from .agent import SCORE_EPS, Discriminator
from .config import RewardVariant

logger = logging.getLogger(__name__)


def gail_reward(score: np.ndarray | float, variant: RewardVariant = "log_d") -> np.ndarray:
    """
    ln D for `log_d`, or -ln(1 - D) for `neg_log_one_minus_d`. Scores are
    clamped to [1e-6, 1 - 1e-6] first, so `log_d` rewards lie in [ln 1e-6, 0].
    """
    s = np.clip(np.asarray(score, dtype=np.float64), SCORE_EPS, 1.0 - SCORE_EPS)
    if variant == "log_d":
        return np.log(s)
    if variant == "neg_log_one_minus_d":
        return -np.log1p(-s)
    raise ValueError(f"unknown reward variant {variant!r}")


@dataclass
class PairBatch:
    """Detached state-action pairs in the discriminator's input layout."""

    features: np.ndarray
    planes: np.ndarray
    actions: np.ndarray

    def __len__(self) -> int:
        return int(self.actions.shape[0])

    @classmethod
    def from_states(cls, states: Sequence[State], actions: Sequence[int]) -> "PairBatch":
        if len(states) != len(actions):
            raise ValueError(f"{len(states)} states for {len(actions)} actions")
        if not states:
            raise ValueError("empty pair batch")
        return cls(
            features=np.stack([s.features for s in states]).astype(np.float32),
            planes=np.stack([s.planes() for s in states]).astype(np.float32),
            actions=np.asarray(actions, dtype=np.int64),
        )

    def take(self, idx: np.ndarray) -> "PairBatch":
        return PairBatch(self.features[idx], self.planes[idx], self.actions[idx])

    @staticmethod
    def concat(a: "PairBatch", b: "PairBatch") -> "PairBatch":
        return PairBatch(
            np.concatenate([a.features, b.features]),
            np.concatenate([a.planes, b.planes]),
            np.concatenate([a.actions, b.actions]),
        )


@dataclass
class DiscStats:
    loss: float
    accuracy: float
    expert_score: float
    generated_score: float


def discriminator_accuracy(disc: Discriminator, expert: PairBatch, generated: PairBatch) -> float:
    """Fraction of pairs on the right side of D = 0.5."""
    e = disc.logits(expert.features, expert.planes, expert.actions).numpy()
    g = disc.logits(generated.features, generated.planes, generated.actions).numpy()
    return float((np.sum(e > 0) + np.sum(g <= 0)) / (e.size + g.size))


def discriminator_update(
    disc: Discriminator,
    optimizer: Adam,
    expert: PairBatch,
    generated: PairBatch,
    rng: np.random.Generator,
    batch_size: Optional[int] = None,
) -> DiscStats:
    """
    One gradient step on binary cross-entropy over a 1:1 minibatch: expert
    pairs labelled 1, generated pairs 0. Loss and accuracy are measured
    before the step.

    Raises:
        ValueError: either batch is empty.
    """
    if len(expert) == 0 or len(generated) == 0:
        raise ValueError(f"discriminator_update needs both batches non-empty ({len(expert)} expert, {len(generated)} generated)")
    n = min(len(expert), len(generated))
    if batch_size is not None:
        n = min(n, batch_size)
    e = expert.take(rng.choice(len(expert), size=n, replace=False))
    g = generated.take(rng.choice(len(generated), size=n, replace=False))
    both = PairBatch.concat(e, g)
    targets = np.concatenate([np.ones(n), np.zeros(n)]).astype(np.float32)
    with Tape() as tape:
        logits = disc.logits(both.features, both.planes, both.actions)
        loss = ops.binary_cross_entropy_with_logits(logits, targets)
    grads = tape.gradient(loss, disc.parameters)
    optimizer.step(grads)

    z = logits.numpy().astype(np.float64)
    scores = np.clip(0.5 * (1.0 + np.tanh(0.5 * z)), SCORE_EPS, 1.0 - SCORE_EPS)
    stats = DiscStats(
        loss=loss.item(),
        accuracy=float(np.mean((z > 0) == (targets > 0.5))),
        expert_score=float(scores[:n].mean()),
        generated_score=float(scores[n:].mean()),
    )
    logger.debug("discriminator_update: n=%d loss=%.4f acc=%.3f", n, stats.loss, stats.accuracy)
    return stats
