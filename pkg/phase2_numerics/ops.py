"""
Differentiable operations. Each op computes its value with numpy and, when a
tape is active and an input needs gradients, records a backward closure.
"""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import NonFiniteError, ShapeError
from .tensor import DTYPE, Tensor, _check_finite, active_tape, as_tensor


def _emit(op: str, value: np.ndarray, inputs: Sequence[Tensor], backward: Any) -> Tensor:
    value = np.ascontiguousarray(value, dtype=DTYPE)
    _check_finite(value, op)
    tape = active_tape()
    needs_grad = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor.wrap(value, requires_grad=needs_grad)
    if needs_grad:
        tape.record(out, inputs, backward)
    return out


def _broadcastable(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(op, a.shape, b.shape, "not broadcastable") from None


def add(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcastable("add", a, b)
    return _emit("add", a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcastable("sub", a, b)
    return _emit("sub", a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcastable("mul", a, b)
    return _emit("mul", a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def matmul(a: Any, b: Any) -> Tensor:
    """(k,) @ (k, m) or (n, k) @ (k, m)."""
    a, b = as_tensor(a), as_tensor(b)
    if b.ndim != 2 or a.ndim not in (1, 2) or a.shape[-1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)

    def backward(g: np.ndarray):
        if a.ndim == 1:
            return g @ b.data.T, np.outer(a.data, g)
        return g @ b.data.T, a.data.T @ g

    return _emit("matmul", a.data @ b.data, (a, b), backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return _emit("relu", np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return _emit("tanh", y, (x,), lambda g: (g * (1.0 - y * y),))


def sigmoid(x: Tensor) -> Tensor:
    y = (0.5 * (1.0 + np.tanh(0.5 * x.data))).astype(DTYPE)
    return _emit("sigmoid", y, (x,), lambda g: (g * y * (1.0 - y),))


def softplus(x: Tensor) -> Tensor:
    """log(1 + e^x), computed without overflow."""
    y = np.logaddexp(0.0, x.data)
    s = 0.5 * (1.0 + np.tanh(0.5 * x.data))
    return _emit("softplus", y, (x,), lambda g: (g * s,))


def exp(x: Tensor) -> Tensor:
    y = np.exp(x.data)
    return _emit("exp", y, (x,), lambda g: (g * y,))


def log(x: Tensor) -> Tensor:
    if np.any(x.data <= 0):
        raise NonFiniteError("log: non-positive input")
    return _emit("log", np.log(x.data), (x,), lambda g: (g / x.data,))


def square(x: Tensor) -> Tensor:
    return _emit("square", x.data * x.data, (x,), lambda g: (2.0 * g * x.data,))


def clip(x: Tensor, low: float, high: float) -> Tensor:
    """Clamp to [low, high]; the gradient is zero wherever the clamp is active."""
    inside = (x.data >= low) & (x.data <= high)
    return _emit("clip", np.clip(x.data, low, high), (x,), lambda g: (g * inside,))


def minimum(a: Any, b: Any) -> Tensor:
    """Elementwise minimum; ties route the gradient to `a`."""
    a, b = as_tensor(a), as_tensor(b)
    _broadcastable("minimum", a, b)
    pick_a = a.data <= b.data
    return _emit(
        "minimum",
        np.where(pick_a, a.data, b.data),
        (a, b),
        lambda g: (g * pick_a, g * ~pick_a),
    )


def sum(x: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    def backward(g: np.ndarray):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape),)

    return _emit("sum", x.data.sum(axis=axis, keepdims=keepdims), (x,), backward)


def mean(x: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    n = x.size if axis is None else int(np.prod([x.shape[a] for a in np.atleast_1d(axis)]))
    return mul(sum(x, axis=axis, keepdims=keepdims), 1.0 / n)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    try:
        value = x.data.reshape(shape)
    except ValueError:
        raise ShapeError("reshape", x.shape, tuple(shape)) from None
    return _emit("reshape", value, (x,), lambda g: (g.reshape(x.shape),))


def concat(tensors: Sequence[Any], axis: int = 0) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    try:
        value = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError:
        raise ShapeError("concat", ts[0].shape, ts[-1].shape, f"axis={axis}") from None
    bounds = np.cumsum([t.shape[axis] for t in ts])[:-1]
    return _emit("concat", value, ts, lambda g: tuple(np.split(g, bounds, axis=axis)))


def gather(x: Tensor, index: np.ndarray) -> Tensor:
    """Pick x[i, index[i]] for a (N, K) tensor."""
    index = np.asarray(index, dtype=np.int64)
    if x.ndim != 2 or index.shape != (x.shape[0],):
        raise ShapeError("gather", x.shape, index.shape)
    rows = np.arange(x.shape[0])

    def backward(g: np.ndarray):
        gx = np.zeros_like(x.data)
        gx[rows, index] = g
        return (gx,)

    return _emit("gather", x.data[rows, index], (x,), backward)


def _check_logits(op: str, x: Tensor) -> None:
    if x.ndim == 0 or x.shape[-1] == 0:
        raise ShapeError(op, x.shape, (1,), "logits must have length >= 1")


def log_softmax(x: Tensor) -> Tensor:
    """Log-probabilities along the last axis."""
    _check_logits("log_softmax", x)
    z = x.data.astype(np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    y = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
    p = np.exp(y)
    return _emit(
        "log_softmax",
        y,
        (x,),
        lambda g: (g - p * g.sum(axis=-1, keepdims=True),),
    )


def softmax(logits: Any) -> Tensor:
    """
    Probabilities along the last axis. Positive, summing to 1, and invariant to
    a constant shift of the logits.

    Raises:
        ShapeError: empty logits.
        NonFiniteError: non-finite logits.
    """
    if not isinstance(logits, Tensor):
        arr = np.asarray(logits, dtype=np.float64)
        if arr.size == 0:
            raise ShapeError("softmax", arr.shape, (1,), "logits must have length >= 1")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("softmax: non-finite logits")
        logits = Tensor(arr)
    _check_logits("softmax", logits)
    z = logits.data.astype(np.float64)
    z = np.exp(z - z.max(axis=-1, keepdims=True))
    y = z / z.sum(axis=-1, keepdims=True)
    yf = y.astype(DTYPE)
    return _emit(
        "softmax",
        yf,
        (logits,),
        lambda g: (yf * (g - (g * yf).sum(axis=-1, keepdims=True)),),
    )


def cross_entropy(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean negative log-likelihood of integer targets under (N, K) logits."""
    return sub(0.0, mean(gather(log_softmax(logits), targets)))


def binary_cross_entropy_with_logits(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean of softplus(z) - t*z, the numerically stable BCE."""
    t = Tensor(np.asarray(targets, dtype=DTYPE).reshape(logits.shape))
    return mean(sub(softplus(logits), mul(t, logits)))


def conv2d(x: Tensor, weight: Tensor, bias: Tensor | None, stride: int = 1, padding: int = 0) -> Tensor:
    """
    2-D cross-correlation. `x` is (N, C, H, W) or (C, H, W); `weight` is
    (O, C, kh, kw); `bias` is (O,).
    """
    squeeze = x.ndim == 3
    xd = x.data[None] if squeeze else x.data
    if xd.ndim != 4 or weight.ndim != 4 or xd.shape[1] != weight.shape[1]:
        raise ShapeError("conv2d", x.shape, weight.shape, "input channels must match weight[1]")
    n, c, h, w = xd.shape
    o, _, kh, kw = weight.shape
    s, p = stride, padding
    ho = (h + 2 * p - kh) // s + 1
    wo = (w + 2 * p - kw) // s + 1
    if ho <= 0 or wo <= 0:
        raise ShapeError("conv2d", x.shape, weight.shape, "kernel larger than padded input")

    xp = np.pad(xd, ((0, 0), (0, 0), (p, p), (p, p))) if p else xd
    cols = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, : (ho - 1) * s + 1 : s, : (wo - 1) * s + 1 : s]
    out = np.tensordot(cols, weight.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    if bias is not None:
        if bias.shape != (o,):
            raise ShapeError("conv2d", bias.shape, (o,), "bias must have one entry per output channel")
        out = out + bias.data[None, :, None, None]
    if squeeze:
        out = out[0]

    def backward(g: np.ndarray):
        g4 = g[None] if squeeze else g
        gw = np.tensordot(g4, cols, axes=([0, 2, 3], [0, 2, 3]))
        gb = g4.sum(axis=(0, 2, 3))
        gx = None
        if x.requires_grad:
            dcols = np.tensordot(g4, weight.data, axes=([1], [0]))  # (N, Ho, Wo, C, kh, kw)
            gxp = np.zeros_like(xp)
            for u in range(kh):
                for v in range(kw):
                    gxp[:, :, u : u + s * (ho - 1) + 1 : s, v : v + s * (wo - 1) + 1 : s] += dcols[
                        :, :, :, :, u, v
                    ].transpose(0, 3, 1, 2)
            gx = gxp[:, :, p : p + h, p : p + w] if p else gxp
            if squeeze:
                gx = gx[0]
        return (gx, gw, gb) if bias is not None else (gx, gw)

    inputs = (x, weight, bias) if bias is not None else (x, weight)
    return _emit("conv2d", out, inputs, backward)
