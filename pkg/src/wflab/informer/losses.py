"""Training losses: RMSE, multi-level pinball, and sign-weighted GMADL."""
from __future__ import annotations

from typing import Sequence, Union

import numpy as np

from ..autodiff.ops import constant, maximum, mean, mul, scale, sigmoid, slice_axis, sqrt, sub
from ..autodiff.tensor import Tensor
from ..errors import ShapeError

ArrayLike = Union[Tensor, np.ndarray, Sequence[float]]


def _as_constant(x: ArrayLike) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return constant(np.asarray(x, dtype=np.float64))


def rmse_loss(y: ArrayLike, y_hat: Tensor) -> Tensor:
    """Root mean squared error over all elements."""
    y = _as_constant(y)
    if y.shape != y_hat.shape:
        raise ShapeError(f"targets {y.shape} vs predictions {y_hat.shape}")
    if y.data.size == 0:
        raise ShapeError("empty batch")
    diff = sub(y, y_hat)
    return sqrt(mean(mul(diff, diff)))


def quantile_loss(y: ArrayLike, y_hat: Tensor, levels: Sequence[float]) -> Tensor:
    """Mean over samples of the pinball losses summed across levels.

    y: (batch, 1) targets; y_hat: (batch, len(levels)), one column per
    level in the same order.
    """
    y = _as_constant(y)
    if y_hat.shape[-1] != len(levels):
        raise ShapeError(
            f"predictions have {y_hat.shape[-1]} columns for {len(levels)} levels"
        )
    if y.shape != y_hat.shape[:-1] + (1,):
        raise ShapeError(f"targets {y.shape} vs predictions {y_hat.shape}")
    if y.data.size == 0:
        raise ShapeError("empty batch")
    total = None
    for i, q in enumerate(levels):
        diff = sub(y, slice_axis(y_hat, -1, i, i + 1))  # (batch, 1)
        pinball = maximum(scale(diff, q), scale(diff, q - 1.0))
        total = pinball if total is None else total + pinball
    return mean(total)


def gmadl_loss(y: ArrayLike, y_hat: Tensor, a: float = 100.0, b: float = 2.0) -> Tensor:
    """Mean of -(sigmoid(a*y*yhat) - 1/2)*|y|^b.

    Negative contributions reward predictions whose sign matches the
    target; the |y|^b weight concentrates the objective on large moves.
    Targets act as constants; gradients flow through y_hat only.
    """
    y = _as_constant(y)
    if y.shape != y_hat.shape:
        raise ShapeError(f"targets {y.shape} vs predictions {y_hat.shape}")
    if y.data.size == 0:
        raise ShapeError("empty batch")
    if a <= 0:
        raise ShapeError(f"gmadl a must be > 0, got {a}")
    if b < 0:
        raise ShapeError(f"gmadl b must be >= 0, got {b}")
    weight = constant(np.abs(y.data) ** b)
    s = sigmoid(scale(mul(y, y_hat), a))
    return scale(mean(mul(s + (-0.5), weight)), -1.0)
