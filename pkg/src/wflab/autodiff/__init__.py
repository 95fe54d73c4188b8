"""Reverse-mode autodiff on dense numpy arrays."""
from . import ops
from .optim import AdamState, adam_step, uniform_fan_in, zero_grad
from .tensor import Tensor, backward

__all__ = ["Tensor", "backward", "ops", "AdamState", "adam_step", "zero_grad", "uniform_fan_in"]
