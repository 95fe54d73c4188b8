"""Adam optimizer and parameter initialization."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np

from .tensor import Tensor


@dataclass
class AdamState:
    """First/second moment accumulators keyed by parameter position."""

    m: Dict[int, np.ndarray] = field(default_factory=dict)
    v: Dict[int, np.ndarray] = field(default_factory=dict)
    step: int = 0


def adam_step(
    params: Sequence[Tensor],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update in place; None gradients count as zero."""
    state.step += 1
    t = state.step
    for i, p in enumerate(params):
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        m = state.m.get(i)
        v = state.v.get(i)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        state.m[i] = m
        state.v[i] = v
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        p.data -= lr * m_hat / (np.sqrt(v_hat) + eps)


def zero_grad(params: Sequence[Tensor]) -> None:
    for p in params:
        p.grad = None


def uniform_fan_in(rng: np.random.Generator, shape: Sequence[int], fan_in: int | None = None) -> np.ndarray:
    """U(-1/sqrt(fan_in), +1/sqrt(fan_in)) init; fan_in defaults to shape[0]."""
    shape = tuple(shape)
    if fan_in is None:
        fan_in = shape[0] if shape else 1
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)
