"""Serving-side prediction over contiguous row ranges."""
from __future__ import annotations

from typing import Dict, Sequence

import numpy as np

from ..data.features import FeatureFrame
from ..data.windows import NormStats
from ..errors import ConfigError, InsufficientDataError
from .config import Batch
from .model import InformerModel, forward


def predict_series(
    model: InformerModel,
    frame: FeatureFrame,
    normalization: NormStats,
    start: int,
    stop: int,
    batch_size: int = 256,
) -> np.ndarray:
    """One forecast per target row in [start + past_window, stop).

    Rows [start, stop) supply the input windows, so the first past_window
    rows are context only and the output has stop - start - past_window
    rows. Quantile heads are sorted non-decreasing across levels per row.
    """
    n = model.config.past_window
    if start < frame.warmup:
        raise InsufficientDataError(
            f"slice starts at {start} but features are defined from {frame.warmup}"
        )
    if stop > len(frame.open_time):
        raise InsufficientDataError(
            f"slice ends at {stop} but the frame has {len(frame.open_time)} rows"
        )
    if stop - start <= n:
        raise InsufficientDataError(
            f"slice [{start}, {stop}) shorter than past_window {n} plus one target"
        )
    normalized = normalization.apply(frame.real)
    targets = np.arange(start + n, stop, dtype=np.int64)
    offsets = np.arange(-n, 0)
    chunks = []
    for lo in range(0, targets.size, batch_size):
        rows = targets[lo : lo + batch_size]
        grid = rows[:, None] + offsets[None, :]
        batch = Batch(
            real=normalized[grid],
            cats=frame.cats[grid],
            targets=np.zeros((rows.size, 1)),
        )
        chunks.append(forward(model, batch, training=False).data)
    predictions = np.concatenate(chunks, axis=0)
    if model.config.loss_kind == "quantile":
        predictions = np.sort(predictions, axis=1)
    return predictions


def forecasts_by_level(
    predictions: np.ndarray, levels: Sequence[float]
) -> Dict[float, np.ndarray]:
    """Column view of a quantile prediction matrix keyed by level."""
    if predictions.ndim != 2 or predictions.shape[1] != len(levels):
        raise ConfigError(
            f"prediction matrix {predictions.shape} does not match "
            f"{len(levels)} levels"
        )
    return {level: predictions[:, i] for i, level in enumerate(levels)}
