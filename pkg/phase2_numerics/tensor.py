"""
Tensors and the operation tape used for reverse-mode gradients.

A Tape records every op executed while it is active; `Tape.gradient` walks the
records backwards from a scalar loss. Ops run outside a tape record nothing, so
rollout-time forward passes cost no bookkeeping.
"""

from __future__ import annotations

import contextvars
import logging
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .errors import NonFiniteError, TapeError

logger = logging.getLogger(__name__)

DTYPE = np.float32

_ACTIVE_TAPE: contextvars.ContextVar["Tape | None"] = contextvars.ContextVar(
    "phase2_numerics_active_tape", default=None
)


def _check_finite(arr: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{where}: non-finite values in array of shape {arr.shape}")


class Tensor:
    """Row-major float32 array with an optional gradient requirement."""

    __slots__ = ("data", "requires_grad", "name")

    def __init__(self, data: Any, requires_grad: bool = False, name: str | None = None):
        arr = np.ascontiguousarray(np.asarray(data, dtype=DTYPE))
        _check_finite(arr, name or "Tensor")
        self.data = arr
        self.requires_grad = requires_grad
        self.name = name

    @classmethod
    def wrap(cls, arr: np.ndarray, requires_grad: bool = False) -> "Tensor":
        """Wrap an array produced by an op (already float32 and checked)."""
        out = cls.__new__(cls)
        out.data = arr
        out.requires_grad = requires_grad
        out.name = None
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor.wrap(self.data, requires_grad=False)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # Operator sugar; ops imports tensor, so import lazily.
    def __add__(self, other: Any) -> "Tensor":
        from . import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other: Any) -> "Tensor":
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other: Any) -> "Tensor":
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other: Any) -> "Tensor":
        from . import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self) -> "Tensor":
        from . import ops
        return ops.mul(self, -1.0)

    def __matmul__(self, other: Any) -> "Tensor":
        from . import ops
        return ops.matmul(self, other)


class Parameter(Tensor):
    """A named, trainable tensor."""

    __slots__ = ()

    def __init__(self, data: Any, name: str):
        super().__init__(data, requires_grad=True, name=name)

    def __repr__(self) -> str:
        return f"Parameter(name={self.name!r}, shape={self.shape})"


@dataclass
class _Record:
    output: Tensor
    inputs: tuple[Tensor, ...]
    backward: Callable[[np.ndarray], Sequence[np.ndarray | None]]


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tape:
    """
    Records ops for one forward pass.

    Use as a context manager:

        with Tape() as tape:
            loss = ...
        grads = tape.gradient(loss, params)
    """

    def __init__(self) -> None:
        self._records: list[_Record] = []
        self._produced: set[int] = set()
        self._token: contextvars.Token | None = None

    def __enter__(self) -> "Tape":
        if self._token is not None:
            raise TapeError("tape is already active")
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc: Any) -> None:
        if self._token is not None:
            _ACTIVE_TAPE.reset(self._token)
            self._token = None

    def __len__(self) -> int:
        return len(self._records)

    def record(
        self,
        output: Tensor,
        inputs: Iterable[Tensor],
        backward: Callable[[np.ndarray], Sequence[np.ndarray | None]],
    ) -> None:
        self._records.append(_Record(output, tuple(inputs), backward))
        self._produced.add(id(output))

    def gradient(self, loss: Tensor, params: Iterable[Tensor]) -> dict[str, np.ndarray]:
        """
        Gradients of a scalar `loss` with respect to each named parameter.

        Parameters that did not influence the loss get zeros.

        Raises:
            TapeError: if nothing was recorded, the loss was not produced on
                this tape, or the loss is not a scalar.
        """
        if not self._records:
            raise TapeError("backward before forward: the tape recorded no operations")
        if loss.size != 1:
            raise TapeError(f"loss must be a scalar, got shape {loss.shape}")
        if id(loss) not in self._produced:
            raise TapeError("loss was not produced by an operation recorded on this tape")

        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for rec in reversed(self._records):
            g = grads.pop(id(rec.output), None)
            if g is None:
                continue
            for tensor, gi in zip(rec.inputs, rec.backward(g)):
                if gi is None or not tensor.requires_grad:
                    continue
                gi = _unbroadcast(np.asarray(gi, dtype=DTYPE), tensor.shape)
                key = id(tensor)
                grads[key] = grads[key] + gi if key in grads else gi

        out: dict[str, np.ndarray] = {}
        for p in params:
            if p.name is None:
                raise TapeError("gradient() needs named parameters")
            g = grads.get(id(p))
            out[p.name] = np.zeros_like(p.data) if g is None else g.astype(DTYPE, copy=False)
            _check_finite(out[p.name], f"gradient of {p.name}")
        logger.debug("tape: %d records, %d parameter gradients", len(self._records), len(out))
        return out


def active_tape() -> Tape | None:
    return _ACTIVE_TAPE.get()


def backward(loss: Tensor, params: Iterable[Tensor], tape: Tape | None = None) -> dict[str, np.ndarray]:
    """Gradients of `loss` per parameter, from `tape` or the currently active one."""
    tape = tape if tape is not None else _ACTIVE_TAPE.get()
    if tape is None:
        raise TapeError("backward before forward: no tape recorded this computation")
    return tape.gradient(loss, params)


def as_tensor(value: Any) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)
