"""Walk-forward window tiling over a feature frame.

Each window has an in-sample block (train then validation, temporally
ordered) followed by an out-of-sample test block; successive windows
advance by the test span so the test blocks tile a contiguous period
ending at the last row. Spans quoted in months use 30-day months so row
counts are identical across windows.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..errors import ParameterError, SizingError
from ..intervals import month_rows
from .features import FeatureFrame


@dataclass(frozen=True)
class Span:
    start: int
    stop: int

    def __len__(self) -> int:
        return self.stop - self.start

    @property
    def slice(self) -> slice:
        return slice(self.start, self.stop)


@dataclass(frozen=True)
class NormStats:
    """Per-feature mean/std fitted on a window's train rows only."""

    mean: np.ndarray
    std: np.ndarray

    def apply(self, real: np.ndarray) -> np.ndarray:
        return (real - self.mean) / self.std


@dataclass(frozen=True)
class DataWindow:
    index: int  # 1-based
    train: Span
    validation: Span
    test: Span
    normalization: NormStats

    @property
    def in_sample(self) -> Span:
        return Span(self.train.start, self.validation.stop)


def _fit_norm(frame: FeatureFrame, train: Span) -> NormStats:
    start = max(train.start, frame.warmup)
    if start >= train.stop:
        raise SizingError(
            f"train span [{train.start}, {train.stop}) has no rows past the "
            f"{frame.warmup}-row warm-up"
        )
    rows = frame.real[start : train.stop]
    mean = rows.mean(axis=0)
    std = rows.std(axis=0, ddof=0)
    constant = rows.min(axis=0) == rows.max(axis=0)
    # Constant feature: pass through exactly centered with unit scale.
    mean = np.where(constant, rows[0], mean)
    std = np.where(constant, 1.0, std)
    return NormStats(mean=mean, std=std)


def make_windows_rows(
    frame: FeatureFrame,
    n_windows: int,
    in_sample_rows: int,
    out_sample_rows: int,
    val_fraction: float = 0.2,
) -> List[DataWindow]:
    """Tile windows by explicit row counts, anchored at the frame's end."""
    if n_windows < 1:
        raise ParameterError(f"n_windows must be >= 1, got {n_windows}")
    if in_sample_rows < 1 or out_sample_rows < 1:
        raise ParameterError("window spans must be positive")
    if not 0.0 <= val_fraction < 1.0:
        raise ParameterError(f"val_fraction must be in [0, 1), got {val_fraction}")
    required = in_sample_rows + n_windows * out_sample_rows
    if required > len(frame):
        raise SizingError(
            f"need {required} rows ({in_sample_rows} in-sample + {n_windows} x "
            f"{out_sample_rows} test), frame has {len(frame)}"
        )
    base = len(frame) - required
    val_rows = int(round(in_sample_rows * val_fraction))
    if val_rows >= in_sample_rows:
        raise ParameterError("validation would consume the whole in-sample block")
    windows = []
    for k in range(n_windows):
        in_start = base + k * out_sample_rows
        in_stop = in_start + in_sample_rows
        train = Span(in_start, in_stop - val_rows)
        validation = Span(in_stop - val_rows, in_stop)
        test = Span(in_stop, in_stop + out_sample_rows)
        windows.append(
            DataWindow(
                index=k + 1,
                train=train,
                validation=validation,
                test=test,
                normalization=_fit_norm(frame, train),
            )
        )
    return windows


def make_windows(
    frame: FeatureFrame,
    n_windows: int = 6,
    in_sample_months: float = 24.0,
    out_sample_months: float = 6.0,
    val_fraction: float = 0.2,
) -> List[DataWindow]:
    """Tile windows by 30-day-month spans (defaults: 24 in, 6 out, 20% validation)."""
    return make_windows_rows(
        frame,
        n_windows,
        month_rows(in_sample_months, frame.interval_ms),
        month_rows(out_sample_months, frame.interval_ms),
        val_fraction,
    )
