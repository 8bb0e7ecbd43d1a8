"""
Dense and conv2d layer parameters, initialization and the shared forward().
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np

from . import ops
from .errors import ShapeError
from .tensor import DTYPE, Parameter, Tensor, as_tensor

LayerKind = Literal["dense", "conv2d"]

RELU_GAIN = math.sqrt(2.0)


@dataclass(frozen=True)
class ConvMeta:
    kernel_size: int
    stride: int = 1
    padding: int = 0


@dataclass
class LayerParams:
    """
    Weights of one layer.

    dense:  weight (in, out), bias (out,)
    conv2d: weight (out, in, k, k), bias (out,), plus ConvMeta
    """

    kind: LayerKind
    weight: Parameter
    bias: Parameter
    meta: ConvMeta | None = None

    def __post_init__(self) -> None:
        w, b = self.weight.shape, self.bias.shape
        if self.kind == "dense":
            if len(w) != 2 or b != (w[1],):
                raise ShapeError("dense params", w, b, "expected weight (in, out) and bias (out,)")
        elif self.kind == "conv2d":
            if self.meta is None:
                raise ValueError("conv2d layer needs ConvMeta")
            k = self.meta.kernel_size
            if len(w) != 4 or w[2:] != (k, k) or b != (w[0],):
                raise ShapeError("conv2d params", w, b, f"expected weight (out, in, {k}, {k}) and bias (out,)")
        else:
            raise ValueError(f"unknown layer kind {self.kind!r}")

    @property
    def parameters(self) -> list[Parameter]:
        return [self.weight, self.bias]


def _uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, gain: float) -> np.ndarray:
    # Var = gain^2 / fan_in for U(-a, a) with a = gain * sqrt(3 / fan_in).
    bound = gain * math.sqrt(3.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(DTYPE)


def dense_params(
    name: str,
    in_features: int,
    out_features: int,
    rng: np.random.Generator,
    gain: float = 1.0,
) -> LayerParams:
    return LayerParams(
        kind="dense",
        weight=Parameter(_uniform(rng, (in_features, out_features), in_features, gain), f"{name}.weight"),
        bias=Parameter(np.zeros(out_features, dtype=DTYPE), f"{name}.bias"),
    )


def conv2d_params(
    name: str,
    in_channels: int,
    out_channels: int,
    kernel_size: int,
    rng: np.random.Generator,
    stride: int = 1,
    padding: int | None = None,
    gain: float = RELU_GAIN,
) -> LayerParams:
    """Conv layer; padding defaults to k // 2, which keeps the grid size at stride 1 for odd k."""
    fan_in = in_channels * kernel_size * kernel_size
    pad = kernel_size // 2 if padding is None else padding
    return LayerParams(
        kind="conv2d",
        weight=Parameter(
            _uniform(rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in, gain),
            f"{name}.weight",
        ),
        bias=Parameter(np.zeros(out_channels, dtype=DTYPE), f"{name}.bias"),
        meta=ConvMeta(kernel_size=kernel_size, stride=stride, padding=pad),
    )


def forward(params: LayerParams, x: Tensor | np.ndarray) -> Tensor:
    """
    Apply one layer. Dense accepts (in,) or (N, in); conv2d accepts (C, H, W)
    or (N, C, H, W).

    Raises:
        ShapeError: input incompatible with the layer, reporting both shapes.
    """
    x = as_tensor(x)
    if params.kind == "dense":
        if x.ndim not in (1, 2) or x.shape[-1] != params.weight.shape[0]:
            raise ShapeError("dense forward", x.shape, params.weight.shape)
        return ops.add(ops.matmul(x, params.weight), params.bias)
    meta = params.meta
    if x.ndim not in (3, 4) or x.shape[-3] != params.weight.shape[1]:
        raise ShapeError("conv2d forward", x.shape, params.weight.shape)
    return ops.conv2d(x, params.weight, params.bias, stride=meta.stride, padding=meta.padding)


def collect_parameters(layers: Iterable[LayerParams]) -> list[Parameter]:
    return [p for layer in layers for p in layer.parameters]
