"""
Errors raised by the retina and the search environment.
"""

from __future__ import annotations


class FoveationError(ValueError):
    """Bad image size, fixation out of bounds, or empty fixation list."""


class EpisodeError(RuntimeError):
    """Illegal episode transition (step after done, bad action) or unusable image."""
