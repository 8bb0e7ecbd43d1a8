"""
Desk-scale feature extractor: fixed average pooling, then three conv layers
that reduce the canvas to one feature column per 32x32 action cell.
"""

from __future__ import annotations

import logging

import numpy as np

from phase2_numerics import ops
from phase2_numerics.errors import ShapeError
from phase2_numerics.layers import LayerParams, collect_parameters, conv2d_params, forward
from phase2_numerics.tensor import Parameter, Tensor

from .config import EnvConfig

logger = logging.getLogger(__name__)

CELL = 32


def pool_image(pixels: np.ndarray, factor: int) -> np.ndarray:
    """(H, W, 3) -> (3, H/f, W/f) box average."""
    h, w, c = pixels.shape
    if h % factor or w % factor:
        raise ShapeError("pool_image", pixels.shape, (factor, factor), "size not divisible by pool factor")
    pooled = pixels.reshape(h // factor, factor, w // factor, factor, c).mean(axis=(1, 3))
    return np.ascontiguousarray(pooled.transpose(2, 0, 1), dtype=np.float32)


class Extractor:
    """
    conv1 (k = s = 16/pool) -> ReLU -> conv2 (k = s = 2) -> ReLU -> conv3 (1x1) -> ReLU.

    Input is the pooled image (3, H/pool, W/pool); output (C, H/32, W/32).
    Trained jointly with the policy.
    """

    def __init__(self, config: EnvConfig, rng: np.random.Generator, name: str = "extractor"):
        self.config = config
        self.pool = config.pool
        k1 = CELL // (2 * config.pool)
        hidden = max(8, config.feature_channels // 2)
        self.layers: list[LayerParams] = [
            conv2d_params(f"{name}.conv1", 3, hidden, k1, rng, stride=k1, padding=0),
            conv2d_params(f"{name}.conv2", hidden, config.feature_channels, 2, rng, stride=2, padding=0),
            conv2d_params(f"{name}.conv3", config.feature_channels, config.feature_channels, 1, rng, padding=0),
        ]
        fov = config.foveation
        self.input_shape = (3, fov.height // config.pool, fov.width // config.pool)
        self.output_hw = (fov.height // CELL, fov.width // CELL)

    @property
    def parameters(self) -> list[Parameter]:
        return collect_parameters(self.layers)

    def __call__(self, pooled: Tensor | np.ndarray) -> Tensor:
        """(3, h, w) or (N, 3, h, w) pooled input -> (C, 10, 16) or (N, C, 10, 16)."""
        shape = tuple(pooled.shape)
        if shape[-3:] != self.input_shape:
            raise ShapeError("extractor", shape, self.input_shape, "pooled ReT-image has the wrong size")
        x = pooled
        for layer in self.layers:
            x = ops.relu(forward(layer, x))
        return x

    def encode(self, pixels: np.ndarray) -> np.ndarray:
        """Features of a full-size (H, W, 3) image, outside any tape."""
        return self(pool_image(pixels, self.pool)).numpy()


def category_planes(category: int, n_categories: int, hw: tuple[int, int]) -> np.ndarray:
    """(K, h, w) broadcast one-hot planes."""
    if not 0 <= category < n_categories:
        raise ValueError(f"category {category} outside [0, {n_categories})")
    planes = np.zeros((n_categories,) + hw, dtype=np.float32)
    planes[category] = 1.0
    return planes


def extract_features(extractor: Extractor, ret_pixels: np.ndarray, category: int) -> np.ndarray:
    """
    (C + K, 10, 16): extractor features of a full-size ReT-image with the
    category one-hot planes appended.

    Raises:
        ShapeError: image is not canvas-sized.
    """
    fov = extractor.config.foveation
    if ret_pixels.shape != (fov.height, fov.width, 3):
        raise ShapeError("extract_features", ret_pixels.shape, (fov.height, fov.width, 3))
    feats = extractor.encode(ret_pixels)
    planes = category_planes(category, extractor.config.n_categories, extractor.output_hw)
    return np.concatenate([feats, planes], axis=0)
