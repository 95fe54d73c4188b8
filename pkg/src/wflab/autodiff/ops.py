"""Differentiable operations on Tensors.

Every op builds the output Tensor eagerly in numpy and attaches a
vector-Jacobian callback used by tensor.backward. Elementwise ops follow
numpy broadcasting; gradients of broadcast inputs are summed back to the
input shape. Only ndim >= 1 arrays flow through here; matmul requires
ndim >= 2 on both sides.
"""
from __future__ import annotations

from typing import Optional, Sequence, Tuple

import numpy as np

from ..errors import ShapeError
from .tensor import Tensor


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _broadcastable(a: Tuple[int, ...], b: Tuple[int, ...]) -> bool:
    for x, y in zip(reversed(a), reversed(b)):
        if x != y and x != 1 and y != 1:
            return False
    return True


def _check_elementwise(a: Tensor, b: Tensor, op: str) -> None:
    if not _broadcastable(a.shape, b.shape):
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast")


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_elementwise(a, b, "add")
    out = Tensor(a.data + b.data, a.requires_grad or b.requires_grad, (a, b))
    if out.requires_grad:
        out._vjp = lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape))
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_elementwise(a, b, "sub")
    out = Tensor(a.data - b.data, a.requires_grad or b.requires_grad, (a, b))
    if out.requires_grad:
        out._vjp = lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape))
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_elementwise(a, b, "mul")
    out = Tensor(a.data * b.data, a.requires_grad or b.requires_grad, (a, b))
    if out.requires_grad:
        out._vjp = lambda g: (
            _unbroadcast(g * b.data, a.shape),
            _unbroadcast(g * a.data, b.shape),
        )
    return out


def div(a: Tensor, b: Tensor) -> Tensor:
    _check_elementwise(a, b, "div")
    out = Tensor(a.data / b.data, a.requires_grad or b.requires_grad, (a, b))
    if out.requires_grad:
        out._vjp = lambda g: (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        )
    return out


def scale(x: Tensor, s: float) -> Tensor:
    s = float(s)
    out = Tensor(x.data * s, x.requires_grad, (x,))
    if out.requires_grad:
        out._vjp = lambda g: (g * s,)
    return out


def pow_scalar(x: Tensor, p: float) -> Tensor:
    p = float(p)
    out = Tensor(x.data**p, x.requires_grad, (x,))
    if out.requires_grad:
        out._vjp = lambda g: (g * p * x.data ** (p - 1.0),)
    return out


def exp(x: Tensor) -> Tensor:
    y = np.exp(x.data)
    out = Tensor(y, x.requires_grad, (x,))
    if out.requires_grad:
        out._vjp = lambda g: (g * y,)
    return out


def log(x: Tensor) -> Tensor:
    out = Tensor(np.log(x.data), x.requires_grad, (x,))
    if out.requires_grad:
        out._vjp = lambda g: (g / x.data,)
    return out


def sqrt(x: Tensor) -> Tensor:
    y = np.sqrt(x.data)
    out = Tensor(y, x.requires_grad, (x,))
    if out.requires_grad:
        out._vjp = lambda g: (g * 0.5 / y,)
    return out


def sigmoid(x: Tensor) -> Tensor:
    # Stable in both tails.
    d = x.data
    ex = np.exp(np.clip(d, None, 0.0))
    y = np.where(d >= 0, 1.0 / (1.0 + np.exp(-np.clip(d, 0.0, None))), ex / (1.0 + ex))
    out = Tensor(y, x.requires_grad, (x,))
    if out.requires_grad:
        out._vjp = lambda g: (g * y * (1.0 - y),)
    return out


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    out = Tensor(np.where(mask, x.data, 0.0), x.requires_grad, (x,))
    if out.requires_grad:
        out._vjp = lambda g: (g * mask,)
    return out


def elu(x: Tensor, alpha: float = 1.0) -> Tensor:
    d = x.data
    neg = alpha * (np.exp(np.minimum(d, 0.0)) - 1.0)
    y = np.where(d > 0, d, neg)
    out = Tensor(y, x.requires_grad, (x,))
    if out.requires_grad:
        out._vjp = lambda g: (g * np.where(d > 0, 1.0, neg + alpha),)
    return out


def maximum(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise max; on ties the gradient goes to the first operand."""
    _check_elementwise(a, b, "maximum")
    take_a = a.data >= b.data
    out = Tensor(np.where(take_a, a.data, b.data), a.requires_grad or b.requires_grad, (a, b))
    if out.requires_grad:
        out._vjp = lambda g: (
            _unbroadcast(g * take_a, a.shape),
            _unbroadcast(g * ~take_a, b.shape),
        )
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs ndim >= 2 operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2] or not _broadcastable(a.shape[:-2], b.shape[:-2]):
        raise ShapeError(f"matmul: shapes {a.shape} and {b.shape} are incompatible")
    out = Tensor(np.matmul(a.data, b.data), a.requires_grad or b.requires_grad, (a, b))
    if out.requires_grad:

        def vjp(g: np.ndarray):
            ga = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)
            gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)
            return ga, gb

        out._vjp = vjp
    return out


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    out = Tensor(np.transpose(x.data, axes), x.requires_grad, (x,))
    if out.requires_grad:
        out._vjp = lambda g: (np.transpose(g, inverse),)
    return out


def swapaxes(x: Tensor, a: int, b: int) -> Tensor:
    out = Tensor(np.swapaxes(x.data, a, b), x.requires_grad, (x,))
    if out.requires_grad:
        out._vjp = lambda g: (np.swapaxes(g, a, b),)
    return out


def reshape(x: Tensor, shape: Tuple[int, ...]) -> Tensor:
    out = Tensor(x.data.reshape(shape), x.requires_grad, (x,))
    if out.requires_grad:
        out._vjp = lambda g: (g.reshape(x.shape),)
    return out


def broadcast_to(x: Tensor, shape: Tuple[int, ...]) -> Tensor:
    if not _broadcastable(x.shape, tuple(shape)):
        raise ShapeError(f"broadcast_to: cannot broadcast {x.shape} to {tuple(shape)}")
    out = Tensor(np.broadcast_to(x.data, shape).copy(), x.requires_grad, (x,))
    if out.requires_grad:
        out._vjp = lambda g: (_unbroadcast(g, x.shape),)
    return out


def sum_(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = Tensor(x.data.sum(axis=axis, keepdims=keepdims), x.requires_grad, (x,))
    if out.requires_grad:

        def vjp(g: np.ndarray):
            if axis is None:
                return (np.broadcast_to(g, x.shape).copy(),)
            axes = axis if isinstance(axis, tuple) else (axis,)
            if not keepdims:
                g = np.expand_dims(g, axes)
            return (np.broadcast_to(g, x.shape).copy(),)

        out._vjp = vjp
    return out


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        n = x.data.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        n = int(np.prod([x.shape[a] for a in axes]))
    return scale(sum_(x, axis=axis, keepdims=keepdims), 1.0 / n)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax along one axis (max subtracted)."""
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(y, x.requires_grad, (x,))
    if out.requires_grad:
        out._vjp = lambda g: (y * (g - (g * y).sum(axis=axis, keepdims=True)),)
    return out


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = list(tensors)
    out = Tensor(
        np.concatenate([t.data for t in tensors], axis=axis),
        any(t.requires_grad for t in tensors),
        tuple(tensors),
    )
    if out.requires_grad:
        sizes = [t.shape[axis] for t in tensors]
        splits = np.cumsum(sizes)[:-1]

        def vjp(g: np.ndarray):
            return tuple(np.split(g, splits, axis=axis))

        out._vjp = vjp
    return out


def slice_axis(x: Tensor, axis: int, start: int, stop: int, step: int = 1) -> Tensor:
    index: list = [slice(None)] * x.ndim
    index[axis] = slice(start, stop, step)
    index_t = tuple(index)
    out = Tensor(x.data[index_t].copy(), x.requires_grad, (x,))
    if out.requires_grad:

        def vjp(g: np.ndarray):
            gx = np.zeros_like(x.data)
            gx[index_t] = g
            return (gx,)

        out._vjp = vjp
    return out


def pad_axis(x: Tensor, axis: int, before: int, after: int, value: float = 0.0) -> Tensor:
    widths = [(0, 0)] * x.ndim
    widths[axis] = (before, after)
    out = Tensor(
        np.pad(x.data, widths, constant_values=value), x.requires_grad, (x,)
    )
    if out.requires_grad:
        index: list = [slice(None)] * x.ndim
        index[axis] = slice(before, before + x.shape[axis])
        index_t = tuple(index)
        out._vjp = lambda g: (g[index_t],)
    return out


def gather_rows(x: Tensor, idx: np.ndarray) -> Tensor:
    """Select rows along the second-to-last axis.

    x: (..., L, D); idx: integer array (..., U) with the same leading shape.
    Returns (..., U, D). Gradient scatter-adds back into the source rows.
    """
    idx = np.asarray(idx)
    if idx.shape != x.shape[:-2] + (idx.shape[-1],):
        raise ShapeError(f"gather_rows: index shape {idx.shape} does not match {x.shape}")
    expanded = np.broadcast_to(idx[..., None], idx.shape + (x.shape[-1],))
    out = Tensor(np.take_along_axis(x.data, expanded, axis=-2), x.requires_grad, (x,))
    if out.requires_grad:

        def vjp(g: np.ndarray):
            gx = np.zeros_like(x.data)
            flat_gx = gx.reshape(-1, *x.shape[-2:])
            flat_idx = idx.reshape(-1, idx.shape[-1])
            flat_g = g.reshape(-1, *g.shape[-2:])
            rows = np.arange(flat_gx.shape[0])[:, None]
            np.add.at(flat_gx, (rows, flat_idx), flat_g)
            return (gx,)

        out._vjp = vjp
    return out


def scatter_rows(base: Tensor, idx: np.ndarray, rows: Tensor) -> Tensor:
    """Overwrite rows of base along axis -2 at positions idx (unique per batch)."""
    idx = np.asarray(idx)
    expanded = np.broadcast_to(idx[..., None], idx.shape + (base.shape[-1],))
    data = base.data.copy()
    np.put_along_axis(data, expanded, rows.data, axis=-2)
    out = Tensor(data, base.requires_grad or rows.requires_grad, (base, rows))
    if out.requires_grad:

        def vjp(g: np.ndarray):
            g_rows = np.take_along_axis(g, expanded, axis=-2)
            g_base = g.copy()
            np.put_along_axis(g_base, expanded, 0.0, axis=-2)
            return g_base, g_rows

        out._vjp = vjp
    return out


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Look up rows of an embedding table by integer id."""
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise IndexError(
            f"embedding ids out of range [0, {table.shape[0]}): "
            f"min {ids.min()}, max {ids.max()}"
        )
    out = Tensor(table.data[ids], table.requires_grad, (table,))
    if out.requires_grad:

        def vjp(g: np.ndarray):
            gt = np.zeros_like(table.data)
            np.add.at(gt, ids.reshape(-1), g.reshape(-1, table.shape[1]))
            return (gt,)

        out._vjp = vjp
    return out


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean, unit variance, then affine."""
    mu = mean(x, axis=-1, keepdims=True)
    centered = sub(x, mu)
    var = mean(mul(centered, centered), axis=-1, keepdims=True)
    inv = pow_scalar(add(var, constant(np.full(var.shape, eps))), -0.5)
    return add(mul(mul(centered, inv), gain), bias)


def dropout(x: Tensor, rate: float, training: bool, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; identity when not training or rate is 0."""
    if not training or rate == 0.0:
        return x
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return mul(x, constant(keep))


def conv1d(
    x: Tensor,
    weight: Tensor,
    bias: Optional[Tensor] = None,
    stride: int = 1,
    padding="same",
) -> Tensor:
    """1-d convolution over the time axis.

    x: (B, L, C_in); weight: (K, C_in, C_out); bias: (C_out,) or None.
    padding is an int or "same" (stride 1 only).
    """
    k = weight.shape[0]
    if padding == "same":
        if stride != 1:
            raise ShapeError("same padding requires stride 1")
        before = (k - 1) // 2
        after = k - 1 - before
    else:
        before = after = int(padding)
    xp = pad_axis(x, 1, before, after) if (before or after) else x
    length = xp.shape[1]
    if length < k:
        raise ShapeError(f"conv1d: padded length {length} shorter than kernel {k}")
    out_len = (length - k) // stride + 1
    total: Optional[Tensor] = None
    for j in range(k):
        xs = slice_axis(xp, 1, j, j + (out_len - 1) * stride + 1, stride)
        wj = slice_axis(weight, 0, j, j + 1)
        term = matmul(xs, reshape(wj, (weight.shape[1], weight.shape[2])))
        total = term if total is None else add(total, term)
    if bias is not None:
        total = add(total, bias)
    return total


def maxpool1d(x: Tensor, window: int, stride: int, padding: int = 0) -> Tensor:
    """Max pooling over the time axis of (B, L, C); pads with -inf."""
    xp = pad_axis(x, 1, padding, padding, value=-np.inf) if padding else x
    length = xp.shape[1]
    if length < window:
        raise ShapeError(f"maxpool1d: padded length {length} shorter than window {window}")
    out_len = (length - window) // stride + 1
    result: Optional[Tensor] = None
    for j in range(window):
        xs = slice_axis(xp, 1, j, j + (out_len - 1) * stride + 1, stride)
        result = xs if result is None else maximum(result, xs)
    return result
