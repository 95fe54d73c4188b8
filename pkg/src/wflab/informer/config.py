"""Forecaster hyperparameters and the minibatch container."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from ..errors import ConfigError

LOSS_KINDS = ("rmse", "quantile", "gmadl")

# confidence levels used by the quantile head when none are given
DEFAULT_QUANTILE_LEVELS = (
    0.01, 0.02, 0.03, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.97, 0.98, 0.99,
)


@dataclass(frozen=True)
class InformerConfig:
    num_real: int
    cat_sizes: Tuple[int, ...] = (24, 7)
    cat_embed_dim: int = 8
    past_window: int = 20
    model_dim: int = 32
    ffn_dim: int = 64
    heads: int = 2
    encoder_layers: int = 1
    decoder_layers: int = 1
    dropout: float = 0.0
    sampling_factor: float = 5.0
    loss_kind: str = "rmse"
    quantile_levels: Tuple[float, ...] = field(default=DEFAULT_QUANTILE_LEVELS)
    gmadl_a: float = 100.0
    gmadl_b: float = 2.0
    batch_size: int = 128
    learning_rate: float = 1e-4
    max_epochs: int = 40
    patience: int = 15
    validate_every: int = 300

    def __post_init__(self):
        if self.num_real < 1:
            raise ConfigError(f"num_real must be >= 1, got {self.num_real}")
        if any(s < 1 for s in self.cat_sizes):
            raise ConfigError(f"categorical sizes must be >= 1, got {self.cat_sizes}")
        if self.cat_embed_dim < 1:
            raise ConfigError(f"cat_embed_dim must be >= 1, got {self.cat_embed_dim}")
        if self.past_window < 2:
            raise ConfigError(f"past_window must be >= 2, got {self.past_window}")
        if self.model_dim < 1 or self.model_dim % self.heads != 0:
            raise ConfigError(
                f"model_dim {self.model_dim} must be a positive multiple of "
                f"heads {self.heads}"
            )
        if self.ffn_dim < 1:
            raise ConfigError(f"ffn_dim must be >= 1, got {self.ffn_dim}")
        if self.encoder_layers < 1 or self.decoder_layers < 1:
            raise ConfigError("need at least one encoder and one decoder layer")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.sampling_factor <= 0:
            raise ConfigError(f"sampling_factor must be > 0, got {self.sampling_factor}")
        if self.loss_kind not in LOSS_KINDS:
            raise ConfigError(f"loss_kind must be one of {LOSS_KINDS}, got {self.loss_kind!r}")
        levels = self.quantile_levels
        if self.loss_kind == "quantile":
            if not levels:
                raise ConfigError("quantile loss needs at least one level")
            if any(not 0.0 < q < 1.0 for q in levels):
                raise ConfigError(f"quantile levels must lie in (0, 1), got {levels}")
            if any(a >= b for a, b in zip(levels, levels[1:])):
                raise ConfigError(f"quantile levels must be strictly increasing, got {levels}")
        if self.gmadl_a <= 0:
            raise ConfigError(f"gmadl_a must be > 0, got {self.gmadl_a}")
        if self.gmadl_b < 0:
            raise ConfigError(f"gmadl_b must be >= 0, got {self.gmadl_b}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if self.validate_every < 1:
            raise ConfigError(f"validate_every must be >= 1, got {self.validate_every}")

    @property
    def out_dim(self) -> int:
        return len(self.quantile_levels) if self.loss_kind == "quantile" else 1

    @property
    def decoder_start(self) -> int:
        """Length of the decoder's start block, excluding the target slot."""
        return max(1, self.past_window // 2)


@dataclass(frozen=True)
class Batch:
    """One minibatch: z-scored real features, raw categorical ids, targets."""

    real: np.ndarray  # (batch, past_window, num_real)
    cats: np.ndarray  # (batch, past_window, num_cat) int
    targets: np.ndarray  # (batch, 1) next-interval returns

    def __post_init__(self):
        if self.real.ndim != 3 or self.cats.ndim != 3 or self.targets.ndim != 2:
            raise ConfigError(
                f"batch rank mismatch: real {self.real.shape}, cats "
                f"{self.cats.shape}, targets {self.targets.shape}"
            )
        if not (self.real.shape[0] == self.cats.shape[0] == self.targets.shape[0]):
            raise ConfigError("batch sizes differ across fields")
        if self.real.shape[1] != self.cats.shape[1]:
            raise ConfigError("real and categorical window lengths differ")

    def __len__(self) -> int:
        return self.real.shape[0]
