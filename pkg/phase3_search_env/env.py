"""
Search environment: episodes of six saccades over the 10x16 action grid, with
States built from the cumulative ReT-image.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from phase1_data_pipeline.cache import ImageCache
from phase1_data_pipeline.normalizer import N_ACTIONS, cell_center, discretize_fixation
from phase1_data_pipeline.schema import Box

from .config import EnvConfig
from .errors import EpisodeError, FoveationError
from .features import Extractor, category_planes, pool_image
from .retina import BlurPyramid, Point, build_pyramid, compose, fixation_levels, resize_bilinear

logger = logging.getLogger(__name__)


def action_to_pixel(action: int) -> tuple[int, int]:
    """Center (x, y) of an action cell in 512x320 canvas coordinates."""
    if not 0 <= int(action) < N_ACTIONS:
        raise ValueError(f"action {action} outside [0, {N_ACTIONS})")
    return cell_center(int(action))


def to_canvas_point(x: float, y: float, native_w: int, native_h: int, width: int = 512, height: int = 320) -> Point:
    return (x * width / native_w, y * height / native_h)


def to_canvas_box(box: Box, native_w: int, native_h: int, width: int = 512, height: int = 320) -> Box:
    bx, by, bw, bh = box
    sx, sy = width / native_w, height / native_h
    return (bx * sx, by * sy, bw * sx, bh * sy)


def point_in_box(point: Point, box: Optional[Box]) -> bool:
    if box is None:
        return False
    x, y = point
    bx, by, bw, bh = box
    return bx <= x <= bx + bw and by <= y <= by + bh


@dataclass(frozen=True)
class State:
    """
    Search context at one decision: extractor features of the cumulative
    ReT-image, category one-hot and fixation-history planes.

    `pooled` keeps the cumulative ReT-image at extractor input resolution so
    it can be re-encoded with gradients.
    """

    pooled: np.ndarray
    features: np.ndarray
    category: int
    n_categories: int
    history: np.ndarray
    step: int
    mean_level: float

    def category_planes(self) -> np.ndarray:
        return category_planes(self.category, self.n_categories, self.history.shape)

    def planes(self) -> np.ndarray:
        """(K + 1, 10, 16): category planes then the history plane."""
        return np.concatenate([self.category_planes(), self.history[None]], axis=0)

    def as_array(self) -> np.ndarray:
        """(C + K + 1, 10, 16) full state tensor."""
        return np.concatenate([self.features, self.planes()], axis=0)


@dataclass
class EpisodeState:
    image: np.ndarray
    pyramid: BlurPyramid
    category: int
    target_box: Optional[Box]
    fixations: list[Point] = field(default_factory=list)
    level_map: Optional[np.ndarray] = None
    frac_level: Optional[np.ndarray] = None
    visited: list[int] = field(default_factory=list)
    done: bool = False

    @property
    def step_index(self) -> int:
        return len(self.fixations) - 1


class SearchEnv:
    """
    The Environment of the imitation loop. One instance may serve many
    episodes concurrently: all per-episode data lives in EpisodeState, and the
    pyramid cache is thread-safe.
    """

    def __init__(self, extractor: Extractor, config: EnvConfig | None = None, pyramid_cache_size: int = 16):
        self.config = config or extractor.config
        self.extractor = extractor
        self.fov = self.config.foveation
        self.grid_hw = (self.fov.height // 32, self.fov.width // 32)
        self._pyramids = ImageCache(max_size=pyramid_cache_size)

    def prepare_image(self, image: np.ndarray) -> np.ndarray:
        """Canvas-sized float32 RGB in [0, 1].

        Raises:
            EpisodeError: not an image array or non-finite values.
        """
        arr = np.asarray(image)
        if arr.ndim == 2:
            arr = np.repeat(arr[:, :, None], 3, axis=2)
        if arr.ndim != 3 or arr.shape[2] not in (3, 4) or arr.size == 0:
            raise EpisodeError(f"unloadable image of shape {arr.shape}")
        arr = arr[:, :, :3]
        if arr.dtype == np.uint8:
            arr = arr.astype(np.float32) / 255.0
        arr = arr.astype(np.float32)
        if not np.all(np.isfinite(arr)):
            raise EpisodeError("image holds non-finite values")
        return resize_bilinear(arr, self.fov.height, self.fov.width)

    def pyramid(self, image: np.ndarray, key: str | None = None) -> BlurPyramid:
        if key is not None:
            cached = self._pyramids.get(key)
            if cached is not None:
                return BlurPyramid(cached)
        pyr = build_pyramid(image, self.fov)
        if key is not None:
            self._pyramids.set(key, pyr.stack)
        return pyr

    def _state(self, episode: EpisodeState) -> State:
        ret = compose(
            episode.pyramid,
            episode.level_map,
            episode.frac_level if self.fov.blend_levels else None,
        )
        pooled = pool_image(ret.pixels, self.config.pool)
        history = np.zeros(self.grid_hw, dtype=np.float32)
        for idx in episode.visited:
            history[divmod(idx, self.grid_hw[1])] = 1.0
        return State(
            pooled=pooled,
            features=self.extractor(pooled).numpy(),
            category=episode.category,
            n_categories=self.config.n_categories,
            history=history,
            step=episode.step_index,
            mean_level=ret.mean_level,
        )

    def _fixate(self, episode: EpisodeState, point: Point) -> None:
        try:
            lm, fr = fixation_levels(point, self.fov)
        except FoveationError as e:
            raise EpisodeError(str(e)) from e
        if episode.level_map is None:
            episode.level_map, episode.frac_level = lm, fr
        else:
            episode.level_map = np.minimum(episode.level_map, lm)
            episode.frac_level = np.minimum(episode.frac_level, fr)
        episode.fixations.append(point)
        episode.visited.append(discretize_fixation(point[0], point[1], self.fov.width, self.fov.height))

    def reset(
        self,
        image: np.ndarray,
        category: int,
        target_box: Optional[Box] = None,
        key: str | None = None,
        start: Optional[Point] = None,
    ) -> tuple[EpisodeState, State]:
        """
        New episode fixating the image center (or `start`).

        `target_box` is in canvas coordinates; `key` enables pyramid caching.
        """
        if not 0 <= category < self.config.n_categories:
            raise EpisodeError(f"category {category} outside [0, {self.config.n_categories})")
        canvas = self.prepare_image(image)
        episode = EpisodeState(
            image=canvas,
            pyramid=self.pyramid(canvas, key),
            category=category,
            target_box=target_box,
        )
        self._fixate(episode, start if start is not None else (self.fov.width / 2, self.fov.height / 2))
        return episode, self._state(episode)

    def step(self, episode: EpisodeState, action: int) -> tuple[State, bool, bool]:
        """
        Saccade to the center of `action`'s cell.

        Returns:
            (next State, target_hit, done); done after the configured number of new fixations.

        Raises:
            EpisodeError: step after done or invalid action.
        """
        if episode.done:
            raise EpisodeError("step after done")
        try:
            point = action_to_pixel(action)
        except ValueError as e:
            raise EpisodeError(str(e)) from e
        self._fixate(episode, (float(point[0]), float(point[1])))
        hit = point_in_box(point, episode.target_box)
        episode.done = episode.step_index >= self.config.new_fixations
        return self._state(episode), hit, episode.done

    def action_mask(self, episode: EpisodeState) -> Optional[np.ndarray]:
        """Allowed actions under inhibition of return, or None when it is off."""
        if not self.config.inhibition_of_return:
            return None
        mask = np.ones(N_ACTIONS, dtype=bool)
        mask[episode.visited] = False
        return mask

    def replay(
        self,
        image: np.ndarray,
        category: int,
        fixations: Sequence[Point],
        key: str | None = None,
    ) -> list[State]:
        """
        States after each prefix of a canvas-coordinate fixation sequence:
        result[k] is the State with fixations[:k+1] made.
        """
        if not fixations:
            raise EpisodeError("replay needs at least one fixation")
        episode, state = self.reset(image, category, key=key, start=fixations[0])
        states = [state]
        for point in fixations[1:]:
            self._fixate(episode, point)
            states.append(self._state(episode))
        return states
