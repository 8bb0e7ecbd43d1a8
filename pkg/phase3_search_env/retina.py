"""
Retina transform: blur pyramids, single-fixation foveation and cumulative
foveation across a fixation sequence.

Resolution falls off as R(e) = e2 / (e2 + e); a pixel at eccentricity e (deg)
takes pyramid level round(log2(1 / R(e))) clamped to [0, L-1]. Pixels inside
the foveal window always take level 0, so they are copies of the source.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .config import FoveationConfig
from .errors import FoveationError

logger = logging.getLogger(__name__)

BINOMIAL_5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0

Point = tuple[float, float]


@dataclass(frozen=True)
class BlurPyramid:
    """stack[k] is level k, (H, W, C) float32; level 0 is the source."""

    stack: np.ndarray

    @property
    def levels(self) -> list[np.ndarray]:
        return list(self.stack)

    def __len__(self) -> int:
        return self.stack.shape[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.stack.shape[1:]


@dataclass(frozen=True)
class RetImage:
    """Retina-transformed pixels and the integer blur level of every pixel."""

    pixels: np.ndarray
    level_map: np.ndarray
    frac_level: np.ndarray | None = None

    @property
    def mean_level(self) -> float:
        return float(self.level_map.mean())


def _as_hwc(image: np.ndarray) -> np.ndarray:
    arr = np.asarray(image, dtype=np.float32)
    return arr[:, :, None] if arr.ndim == 2 else arr


def reduce(image: np.ndarray) -> np.ndarray:
    """Binomial low-pass in both axes, then keep every second row and column."""
    smoothed = ndimage.convolve1d(image.astype(np.float64), BINOMIAL_5, axis=0, mode="reflect")
    smoothed = ndimage.convolve1d(smoothed, BINOMIAL_5, axis=1, mode="reflect")
    return smoothed[::2, ::2]


def resize_bilinear(image: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize of an (h, w, C) array with half-pixel centers and clamped edges."""
    image = _as_hwc(image)
    h, w = image.shape[:2]
    if (h, w) == (height, width):
        return image.astype(np.float32)
    out = ndimage.zoom(
        image.astype(np.float64), (height / h, width / w, 1), order=1, grid_mode=True, mode="nearest"
    )
    return out.astype(np.float32)


def build_pyramid(image: np.ndarray, config: FoveationConfig) -> BlurPyramid:
    """
    L images at full size: level 0 is the input; level k is the input reduced
    k times and re-expanded bilinearly.

    Raises:
        FoveationError: image size differs from the configured canvas.
    """
    image = _as_hwc(image)
    if image.shape[:2] != (config.height, config.width):
        raise FoveationError(
            f"image is {image.shape[1]}x{image.shape[0]}, expected {config.width}x{config.height}"
        )
    levels = [image.copy()]
    reduced = image
    for _ in range(1, config.levels):
        reduced = reduce(reduced)
        levels.append(resize_bilinear(reduced, config.height, config.width))
    stack = np.stack(levels, axis=0).astype(np.float32)
    stack.setflags(write=False)
    return BlurPyramid(stack)


def _check_fixation(fixation: Point, config: FoveationConfig) -> None:
    x, y = fixation
    if not (0 <= x < config.width and 0 <= y < config.height):
        raise FoveationError(f"fixation ({x}, {y}) outside {config.width}x{config.height}")


def eccentricity_map(fixation: Point, config: FoveationConfig) -> np.ndarray:
    """Degrees from the fixation to every pixel center, (H, W)."""
    x, y = fixation
    dx = np.arange(config.width) + 0.5 - x
    dy = np.arange(config.height) + 0.5 - y
    return np.hypot(dy[:, None], dx[None, :]) * config.deg_per_px


def fovea_radius_deg(config: FoveationConfig) -> float:
    # Circumscribes the square foveal window, so the whole window is level 0.
    return config.fovea_radius_px * math.sqrt(2.0) * config.deg_per_px


def fractional_level(ecc_deg: np.ndarray | float, config: FoveationConfig) -> np.ndarray:
    """log2(1 / R(e)) clamped to [0, L-1], zero inside the fovea."""
    e = np.asarray(ecc_deg, dtype=np.float64)
    level = np.log2(1.0 + e / config.e2_deg)
    level = np.where(e <= fovea_radius_deg(config), 0.0, level)
    return np.clip(level, 0.0, config.levels - 1)


def level_for_eccentricity(ecc_deg: np.ndarray | float, config: FoveationConfig) -> np.ndarray:
    """Integer pyramid level per eccentricity; non-decreasing in eccentricity."""
    return np.rint(fractional_level(ecc_deg, config)).astype(np.int8)


def fixation_levels(fixation: Point, config: FoveationConfig) -> tuple[np.ndarray, np.ndarray]:
    """(integer level map, fractional level map) for one fixation."""
    _check_fixation(fixation, config)
    frac = fractional_level(eccentricity_map(fixation, config), config)
    return np.rint(frac).astype(np.int8), frac.astype(np.float32)


def compose(pyramid: BlurPyramid, level_map: np.ndarray, frac_level: np.ndarray | None = None) -> RetImage:
    """Pick every pixel from its level (or blend the two nearest levels when `frac_level` is given)."""
    stack = pyramid.stack
    if frac_level is None:
        idx = level_map.astype(np.intp)[None, :, :, None]
        pixels = np.take_along_axis(stack, idx, axis=0)[0]
    else:
        lo = np.floor(frac_level).astype(np.intp)
        hi = np.minimum(lo + 1, len(pyramid) - 1)
        t = (frac_level - lo)[:, :, None].astype(np.float32)
        a = np.take_along_axis(stack, lo[None, :, :, None], axis=0)[0]
        b = np.take_along_axis(stack, hi[None, :, :, None], axis=0)[0]
        pixels = np.where(t == 0, a, (1.0 - t) * a + t * b).astype(np.float32)
    return RetImage(pixels=pixels, level_map=level_map, frac_level=frac_level)


def foveate(pyramid: BlurPyramid, fixation: Point, config: FoveationConfig) -> RetImage:
    """
    ReT-image for one fixation (canvas pixel coordinates).

    Raises:
        FoveationError: fixation outside the canvas.
    """
    level_map, frac = fixation_levels(fixation, config)
    return compose(pyramid, level_map, frac if config.blend_levels else None)


def cumulative_levels(fixations: Sequence[Point], config: FoveationConfig) -> tuple[np.ndarray, np.ndarray]:
    if not fixations:
        raise FoveationError("cumulative foveation needs at least one fixation")
    level_map, frac = fixation_levels(fixations[0], config)
    for fixation in fixations[1:]:
        lm, fr = fixation_levels(fixation, config)
        level_map = np.minimum(level_map, lm)
        frac = np.minimum(frac, fr)
    return level_map, frac


def cumulative_foveate(pyramid: BlurPyramid, fixations: Sequence[Point], config: FoveationConfig) -> RetImage:
    """
    ReT-image whose per-pixel level is the minimum over all fixations, so each
    added fixation can only de-blur.

    Raises:
        FoveationError: empty list or a fixation outside the canvas.
    """
    level_map, frac = cumulative_levels(fixations, config)
    logger.debug("cumulative_foveate: %d fixations, mean level %.3f", len(fixations), float(level_map.mean()))
    return compose(pyramid, level_map, frac if config.blend_levels else None)


def blur_level_raster(ret: RetImage, config: FoveationConfig) -> np.ndarray:
    """Level map scaled to [0, 1] for grayscale export."""
    return ret.level_map.astype(np.float32) / (config.levels - 1)
