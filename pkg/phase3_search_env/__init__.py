"""
Phase 3: Retina and Search Environment.

Blur pyramids, foveation and cumulative foveation of canvas images, the
desk-scale feature extractor, and the six-saccade search episode.
"""

from .config import EnvConfig, FoveationConfig
from .env import EpisodeState, SearchEnv, State, action_to_pixel, to_canvas_box, to_canvas_point
from .errors import EpisodeError, FoveationError
from .features import Extractor, extract_features, pool_image
from .retina import BlurPyramid, RetImage, build_pyramid, cumulative_foveate, foveate

__all__ = [
    "BlurPyramid",
    "EnvConfig",
    "EpisodeError",
    "EpisodeState",
    "Extractor",
    "FoveationConfig",
    "FoveationError",
    "RetImage",
    "SearchEnv",
    "State",
    "action_to_pixel",
    "build_pyramid",
    "cumulative_foveate",
    "extract_features",
    "foveate",
    "pool_image",
    "to_canvas_box",
    "to_canvas_point",
]
