"""
Adam optimizer with bias-corrected moments.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import NonFiniteError, ShapeError
from .tensor import DTYPE, Parameter

logger = logging.getLogger(__name__)


@dataclass
class OptimState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def optim_step(
    state: OptimState,
    params: Sequence[Parameter],
    grads: Mapping[str, np.ndarray],
    max_grad_norm: float | None = None,
) -> list[Parameter]:
    """
    One Adam update. Parameters are rebound to new arrays, so snapshots taken
    before the step keep their old values.

    Raises:
        ShapeError: a gradient does not match its parameter.
        NonFiniteError: a gradient holds NaN/Inf.
    """
    for p in params:
        g = grads.get(p.name)
        if g is None:
            raise ShapeError("optim_step", p.shape, (), f"missing gradient for {p.name}")
        if g.shape != p.shape:
            raise ShapeError("optim_step", p.shape, g.shape, p.name)
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"optim_step: non-finite gradient for {p.name}")

    scale = 1.0
    if max_grad_norm is not None:
        total = float(np.sqrt(sum(float(np.sum(grads[p.name].astype(np.float64) ** 2)) for p in params)))
        if total > max_grad_norm:
            scale = max_grad_norm / (total + 1e-12)

    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    for p in params:
        g = grads[p.name] * scale
        m = state.m.get(p.name)
        v = state.v.get(p.name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[p.name] = m.astype(DTYPE)
        state.v[p.name] = v.astype(DTYPE)
        update = state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        p.data = (p.data - update).astype(DTYPE)
    return list(params)


class Adam:
    """Holds an OptimState for a fixed list of parameters."""

    def __init__(
        self,
        params: Sequence[Parameter],
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        max_grad_norm: float | None = None,
    ):
        self.params = list(params)
        self.state = OptimState(lr=lr, beta1=betas[0], beta2=betas[1], eps=eps)
        self.max_grad_norm = max_grad_norm

    def step(self, grads: Mapping[str, np.ndarray]) -> None:
        optim_step(self.state, self.params, grads, max_grad_norm=self.max_grad_norm)
