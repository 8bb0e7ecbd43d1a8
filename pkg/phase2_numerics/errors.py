"""
Exceptions raised by the numerics toolkit.
"""

from __future__ import annotations


class NumericsError(Exception):
    """Base class for numerics failures."""


class ShapeError(NumericsError, ValueError):
    """Operand shapes are incompatible. Both shapes are kept for the message."""

    def __init__(self, op: str, left: tuple[int, ...], right: tuple[int, ...], detail: str = ""):
        self.op = op
        self.left = tuple(left)
        self.right = tuple(right)
        msg = f"{op}: shape mismatch {self.left} vs {self.right}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class NonFiniteError(NumericsError, ArithmeticError):
    """An operation produced or received NaN/Inf values."""


class TapeError(NumericsError, RuntimeError):
    """Backward requested without a matching recorded forward pass."""


class CheckpointError(NumericsError, ValueError):
    """Checkpoint file is malformed or has an unsupported version."""
