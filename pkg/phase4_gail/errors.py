"""
Exceptions raised by the imitation trainer.
"""

from __future__ import annotations

from typing import Mapping


class ConfigError(ValueError):
    """Unknown key or invalid value in a flat key-value config."""


class DivergenceError(RuntimeError):
    """Training produced non-finite or exploding losses."""

    def __init__(self, iteration: int, diagnostics: Mapping[str, float], detail: str = ""):
        self.iteration = iteration
        self.diagnostics = dict(diagnostics)
        parts = ", ".join(f"{k}={v:.4g}" for k, v in self.diagnostics.items())
        msg = f"training diverged at iteration {iteration}"
        if detail:
            msg += f": {detail}"
        if parts:
            msg += f" ({parts})"
        super().__init__(msg)
