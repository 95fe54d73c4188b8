"""Minibatch training with periodic validation and early stopping.

Validation runs every `validate_every` batches on a global batch counter;
the loop keeps the best-validation parameter snapshot and stops after
`patience` consecutive checks without strict improvement. Fixed seeds make
runs bit-reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from ..autodiff.optim import AdamState, adam_step, zero_grad
from ..autodiff.tensor import Tensor
from ..data.features import FeatureFrame
from ..data.windows import DataWindow, NormStats, Span
from ..errors import DivergenceError, InsufficientDataError
from .config import Batch, InformerConfig
from .losses import gmadl_loss, quantile_loss, rmse_loss
from .model import InformerModel, forward


@dataclass(frozen=True)
class ValidationPoint:
    epoch: int
    batch: int  # global batch counter at the check
    train_loss: float  # loss of the batch that triggered the check
    val_loss: float
    improved: bool


@dataclass
class TrainingLog:
    loss_kind: str
    seed: int
    points: List[ValidationPoint] = field(default_factory=list)
    best_val_loss: float = math.inf
    best_batch: int = 0
    epochs_run: int = 0
    batches_run: int = 0
    stopped_early: bool = False

    def lines(self) -> List[str]:
        """Stable text rendering, one line per validation point."""
        out = [f"loss={self.loss_kind} seed={self.seed}"]
        for p in self.points:
            out.append(
                f"epoch={p.epoch} batch={p.batch} train={p.train_loss:.17g} "
                f"val={p.val_loss:.17g} improved={int(p.improved)}"
            )
        out.append(
            f"best={self.best_val_loss:.17g} at_batch={self.best_batch} "
            f"epochs={self.epochs_run} batches={self.batches_run} "
            f"early_stop={int(self.stopped_early)}"
        )
        return out


class SampleSet:
    """Target indices plus batch extraction for one span of a feature frame.

    A sample for target row t feeds rows [t - past_window, t) to the model
    and predicts the return of row t; targets whose input window would
    touch warm-up rows are excluded.
    """

    def __init__(
        self,
        frame: FeatureFrame,
        span: Span,
        past_window: int,
        normalization: NormStats,
    ):
        first = max(span.start, frame.warmup + past_window)
        self.targets = np.arange(first, span.stop, dtype=np.int64)
        if self.targets.size == 0:
            raise InsufficientDataError(
                f"span [{span.start}, {span.stop}) leaves no usable samples "
                f"after warm-up {frame.warmup} and window {past_window}"
            )
        self.past_window = past_window
        self.frame = frame
        self.normalized = normalization.apply(frame.real)
        self.returns = frame.returns

    def __len__(self) -> int:
        return self.targets.size

    def batch(self, target_rows: np.ndarray) -> Batch:
        grid = target_rows[:, None] + np.arange(-self.past_window, 0)[None, :]
        return Batch(
            real=self.normalized[grid],
            cats=self.frame.cats[grid],
            targets=self.returns[target_rows][:, None],
        )

    def targets_matrix(self) -> np.ndarray:
        return self.returns[self.targets][:, None]


def make_loss_fn(config: InformerConfig):
    if config.loss_kind == "rmse":
        return lambda y, y_hat: rmse_loss(y, y_hat)
    if config.loss_kind == "quantile":
        levels = config.quantile_levels
        return lambda y, y_hat: quantile_loss(y, y_hat, levels)
    return lambda y, y_hat: gmadl_loss(y, y_hat, config.gmadl_a, config.gmadl_b)


def _batched_predictions(
    model: InformerModel, samples: SampleSet, batch_size: int
) -> np.ndarray:
    chunks = []
    for lo in range(0, len(samples), batch_size):
        batch = samples.batch(samples.targets[lo : lo + batch_size])
        chunks.append(forward(model, batch, training=False).data)
    return np.concatenate(chunks, axis=0)


def validation_loss(
    model: InformerModel, samples: SampleSet, config: InformerConfig
) -> float:
    """Training objective evaluated on a whole sample set in inference mode."""
    preds = _batched_predictions(model, samples, config.batch_size)
    loss_fn = make_loss_fn(config)
    return float(loss_fn(samples.targets_matrix(), Tensor(preds)).data)


def train(
    model: InformerModel,
    frame: FeatureFrame,
    window: DataWindow,
    seed: int,
) -> Tuple[InformerModel, TrainingLog]:
    """Train in place on a window's train split, early-stopping on its
    validation split; returns the model restored to its best checkpoint.

    The untouched model is scored first, so the best checkpoint is
    well-defined even when no later check improves on it.
    """
    config = model.config
    train_samples = SampleSet(frame, window.train, config.past_window, window.normalization)
    val_samples = SampleSet(frame, window.validation, config.past_window, window.normalization)
    loss_fn = make_loss_fn(config)
    rng = np.random.default_rng(seed)
    state = AdamState()
    params = model.parameters()
    log = TrainingLog(loss_kind=config.loss_kind, seed=seed)
    baseline = validation_loss(model, val_samples, config)
    if not math.isfinite(baseline):
        raise DivergenceError(f"non-finite validation loss {baseline} before training")
    log.best_val_loss = baseline
    log.best_batch = 0
    log.points.append(ValidationPoint(0, 0, math.nan, baseline, True))
    best_arrays = model.state_arrays()
    bad_checks = 0
    counter = 0
    stop = False
    for epoch in range(config.max_epochs):
        log.epochs_run = epoch + 1
        order = rng.permutation(len(train_samples))
        for lo in range(0, len(order), config.batch_size):
            rows = train_samples.targets[order[lo : lo + config.batch_size]]
            batch = train_samples.batch(rows)
            loss = loss_fn(batch.targets, forward(model, batch, training=True, rng=rng))
            train_loss = float(loss.data)
            if not math.isfinite(train_loss):
                raise DivergenceError(
                    f"non-finite training loss {train_loss} at epoch {epoch} "
                    f"batch {counter + 1}"
                )
            zero_grad(params)
            loss.backward()
            adam_step(params, state, config.learning_rate)
            counter += 1
            log.batches_run = counter
            if counter % config.validate_every == 0:
                val = validation_loss(model, val_samples, config)
                if not math.isfinite(val):
                    raise DivergenceError(
                        f"non-finite validation loss {val} at epoch {epoch} "
                        f"batch {counter}"
                    )
                improved = val < log.best_val_loss
                log.points.append(
                    ValidationPoint(epoch, counter, train_loss, val, improved)
                )
                if improved:
                    log.best_val_loss = val
                    log.best_batch = counter
                    best_arrays = model.state_arrays()
                    bad_checks = 0
                else:
                    bad_checks += 1
                    if bad_checks >= config.patience:
                        log.stopped_early = True
                        stop = True
                        break
        if stop:
            break
    model.load_state_arrays(best_arrays)
    return model, log
