"""
Actor-critic policy and discriminator networks, action selection and saccade maps.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from phase1_data_pipeline.normalizer import GRID_COLS, GRID_ROWS, N_ACTIONS
from phase1_data_pipeline.rasters import save_gray
from phase2_numerics import ops
from phase2_numerics.checkpoint import load_into, save_checkpoint
from phase2_numerics.errors import ShapeError
from phase2_numerics.layers import collect_parameters, conv2d_params, dense_params, forward
from phase2_numerics.tensor import Parameter, Tensor
from phase3_search_env.config import EnvConfig
from phase3_search_env.env import State
from phase3_search_env.features import Extractor

from .config import NetworkConfig

logger = logging.getLogger(__name__)

SCORE_EPS = 1e-6
MASKED_LOGIT = -1e9


@dataclass(frozen=True)
class PolicyOutput:
    logits: np.ndarray
    value: float

    def __post_init__(self) -> None:
        if self.logits.shape != (N_ACTIONS,):
            raise ShapeError("PolicyOutput", self.logits.shape, (N_ACTIONS,))


def _planes_batch(states: Sequence[State]) -> np.ndarray:
    return np.stack([s.planes() for s in states]).astype(np.float32)


class ActorCritic:
    """
    Shared 3x3 conv trunk over [features, category planes, history], a 1x1
    conv head giving one logit per cell, and a value head on the spatially
    averaged trunk.

    The extractor is shared with the environment and trained through this
    network's loss.
    """

    def __init__(self, extractor: Extractor, config: EnvConfig, network: NetworkConfig, rng: np.random.Generator):
        self.extractor = extractor
        self.config = config
        in_channels = config.feature_channels + config.n_categories + 1
        width = network.trunk_channels
        self.trunk = conv2d_params("policy.trunk", in_channels, width, 3, rng)
        self.logits_head = conv2d_params("policy.logits", width, 1, 1, rng, gain=0.01)
        self.value_head = dense_params("policy.value", width, 1, rng)

    @property
    def head_parameters(self) -> list[Parameter]:
        """Parameters updated at the policy learning rate (extractor included)."""
        return self.extractor.parameters + collect_parameters([self.trunk, self.logits_head])

    @property
    def value_parameters(self) -> list[Parameter]:
        return self.value_head.parameters

    @property
    def parameters(self) -> list[Parameter]:
        return self.head_parameters + self.value_parameters

    def forward_batch(self, features: Tensor | np.ndarray, planes: np.ndarray) -> tuple[Tensor, Tensor]:
        """(N, C, 10, 16) features and (N, K+1, 10, 16) planes -> (N, 160) logits, (N,) values."""
        features = features if isinstance(features, Tensor) else Tensor(features)
        if features.ndim != 4 or planes.ndim != 4 or features.shape[0] != planes.shape[0]:
            raise ShapeError("policy", features.shape, planes.shape, "features and planes must be batched alike")
        n = features.shape[0]
        x = ops.concat([features, Tensor(planes)], axis=1)
        h = ops.relu(forward(self.trunk, x))
        logits = ops.reshape(forward(self.logits_head, h), (n, N_ACTIONS))
        values = ops.reshape(forward(self.value_head, ops.mean(h, axis=(2, 3))), (n,))
        return logits, values

    def __call__(self, state: State) -> PolicyOutput:
        logits, values = self.forward_batch(state.features[None], state.planes()[None])
        return PolicyOutput(logits=logits.numpy()[0].copy(), value=float(values.numpy()[0]))

    def state_dict(self) -> dict[str, np.ndarray]:
        return {p.name: p.data for p in self.parameters}

    def save(self, path: str | Path) -> Path:
        return save_checkpoint(path, self.state_dict())

    def load(self, path: str | Path) -> None:
        load_into(self.parameters, path)


def policy_forward(policy: ActorCritic, state: State) -> PolicyOutput:
    return policy(state)


def _restricted_log_probs(logits: np.ndarray, mask: Optional[np.ndarray]) -> np.ndarray:
    z = logits.astype(np.float64)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (N_ACTIONS,):
            raise ShapeError("action mask", mask.shape, (N_ACTIONS,))
        if not mask.any():
            raise ValueError("every action is masked")
        z = np.where(mask, z, -np.inf)
    z = z - z.max()
    return z - np.log(np.exp(z).sum())


def sample_action(
    output: PolicyOutput, rng: np.random.Generator, mask: Optional[np.ndarray] = None
) -> tuple[int, float]:
    """
    Draw a cell from softmax(logits) restricted to unmasked cells.

    Returns:
        (action, log-probability under the restricted distribution)

    Raises:
        ValueError: all cells masked.
    """
    logp = _restricted_log_probs(output.logits, mask)
    cdf = np.cumsum(np.exp(logp))
    action = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    action = min(action, N_ACTIONS - 1)
    while not np.isfinite(logp[action]):
        action -= 1
    return action, float(logp[action])


def greedy_action(output: PolicyOutput, mask: Optional[np.ndarray] = None) -> tuple[int, float]:
    logp = _restricted_log_probs(output.logits, mask)
    action = int(np.argmax(logp))
    return action, float(logp[action])


def action_probabilities(output: PolicyOutput, mask: Optional[np.ndarray] = None) -> np.ndarray:
    return np.exp(_restricted_log_probs(output.logits, mask))


def saccade_map(output: PolicyOutput) -> np.ndarray:
    """Action probabilities laid out on the 10x16 grid; map[r, c] is action r * 16 + c."""
    return action_probabilities(output).reshape(GRID_ROWS, GRID_COLS)


def inhibition_mask(state: State) -> np.ndarray:
    """Cells not yet fixated in this episode."""
    return state.history.reshape(-1) == 0


def save_saccade_map_csv(smap: np.ndarray, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(smap).to_csv(path, header=False, index=False, float_format="%.8f")
    return path


def saccade_heatmap(smap: np.ndarray, cell: int = 32) -> np.ndarray:
    """Nearest-neighbour upsampling to canvas size, scaled to [0, 1]."""
    up = np.kron(smap, np.ones((cell, cell)))
    lo, hi = float(up.min()), float(up.max())
    return np.zeros_like(up) if hi <= lo else (up - lo) / (hi - lo)


def save_saccade_heatmap(smap: np.ndarray, path: str | Path) -> Path:
    return save_gray(path, saccade_heatmap(smap))


class Discriminator:
    """
    Scores state-action pairs. Input is the state tensor plus a one-hot
    action plane; a conv layer and a 1x1 head give a logit map, read at the
    action's cell.
    """

    def __init__(self, config: EnvConfig, network: NetworkConfig, rng: np.random.Generator):
        self.config = config
        in_channels = config.feature_channels + config.n_categories + 2
        self.conv = conv2d_params("disc.conv1", in_channels, network.disc_channels, 3, rng)
        self.head = conv2d_params("disc.head", network.disc_channels, 1, 1, rng, gain=0.1)

    @property
    def parameters(self) -> list[Parameter]:
        return collect_parameters([self.conv, self.head])

    def logits(self, features: np.ndarray, planes: np.ndarray, actions: np.ndarray) -> Tensor:
        """(N,) logits for detached (N, C, 10, 16) features, (N, K+1, 10, 16) planes and (N,) actions."""
        actions = np.asarray(actions, dtype=np.int64)
        n = actions.shape[0]
        if features.shape[0] != n or planes.shape[0] != n:
            raise ShapeError("discriminator", features.shape, planes.shape, f"expected batch of {n}")
        if n and (actions.min() < 0 or actions.max() >= N_ACTIONS):
            raise ValueError(f"actions must lie in [0, {N_ACTIONS})")
        action_plane = np.zeros((n, N_ACTIONS), dtype=np.float32)
        action_plane[np.arange(n), actions] = 1.0
        x = np.concatenate(
            [features, planes, action_plane.reshape(n, 1, GRID_ROWS, GRID_COLS)], axis=1
        ).astype(np.float32)
        h = ops.relu(forward(self.conv, x))
        cell_logits = ops.reshape(forward(self.head, h), (n, N_ACTIONS))
        return ops.gather(cell_logits, actions)

    def score(self, features: np.ndarray, planes: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """D(s, a) clamped to [1e-6, 1 - 1e-6]."""
        z = self.logits(features, planes, actions).numpy().astype(np.float64)
        return np.clip(0.5 * (1.0 + np.tanh(0.5 * z)), SCORE_EPS, 1.0 - SCORE_EPS)

    def score_states(self, states: Sequence[State], actions: Sequence[int]) -> np.ndarray:
        feats = np.stack([s.features for s in states])
        return self.score(feats, _planes_batch(states), np.asarray(actions))

    def state_dict(self) -> dict[str, np.ndarray]:
        return {p.name: p.data for p in self.parameters}

    def save(self, path: str | Path) -> Path:
        return save_checkpoint(path, self.state_dict())

    def load(self, path: str | Path) -> None:
        load_into(self.parameters, path)


def discriminator_score(disc: Discriminator, state: State, action: int) -> float:
    return float(disc.score_states([state], [action])[0])
