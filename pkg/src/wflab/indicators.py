"""Technical indicators over 1-d price/return arrays.

Every indicator returns an IndicatorSeries: a full-length float array with
NaN before defined_from and finite values from there on. All indicators are
causal; value i depends only on inputs [0..i].
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.signal import lfilter

from .errors import InsufficientDataError, ParameterError


@dataclass(frozen=True)
class IndicatorSeries:
    values: np.ndarray
    defined_from: int

    def __len__(self) -> int:
        return self.values.shape[0]


def _as_1d(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ParameterError(f"expected 1-d input, got shape {arr.shape}")
    return arr


def _check_window(window: int) -> None:
    if window < 1:
        raise ParameterError(f"window must be >= 1, got {window}")


def ema(x, window: int) -> IndicatorSeries:
    """Exponential moving average, alpha = 2/(window+1), seeded at x[0]."""
    _check_window(window)
    arr = _as_1d(x)
    if arr.size == 0:
        return IndicatorSeries(arr.copy(), 0)
    alpha = 2.0 / (window + 1.0)
    # y[t] = alpha*x[t] + (1-alpha)*y[t-1], y[0] = x[0]
    zi = np.array([(1.0 - alpha) * arr[0]])
    values, _ = lfilter([alpha], [1.0, alpha - 1.0], arr, zi=zi)
    return IndicatorSeries(values, 0)


def smma(x, window: int) -> IndicatorSeries:
    """Smoothed moving average: seed = mean of the first window values,
    then s[t] = (s[t-1]*(window-1) + x[t]) / window."""
    _check_window(window)
    arr = _as_1d(x)
    if arr.size < window:
        raise InsufficientDataError(f"smma window {window} needs {window} values, got {arr.size}")
    seed = arr[:window].mean()
    values = np.full(arr.size, np.nan)
    values[window - 1] = seed
    if arr.size > window:
        w = float(window)
        zi = np.array([((w - 1.0) / w) * seed])
        tail, _ = lfilter([1.0 / w], [1.0, -(w - 1.0) / w], arr[window:], zi=zi)
        values[window:] = tail
    return IndicatorSeries(values, window - 1)


def rolling_mean(x, window: int) -> IndicatorSeries:
    _check_window(window)
    arr = _as_1d(x)
    if arr.size < window:
        raise InsufficientDataError(f"rolling mean window {window} exceeds length {arr.size}")
    # Anchor the cumsum on the first window's mean: conditions the sums
    # without letting later values influence earlier outputs.
    shift = arr[:window].mean()
    c = np.concatenate([[0.0], np.cumsum(arr - shift)])
    values = np.full(arr.size, np.nan)
    values[window - 1:] = (c[window:] - c[:-window]) / window + shift
    return IndicatorSeries(values, window - 1)


def rolling_std(x, window: int, ddof: int = 0) -> IndicatorSeries:
    _check_window(window)
    if window <= ddof:
        raise ParameterError(f"window {window} must exceed ddof {ddof}")
    arr = _as_1d(x)
    if arr.size < window:
        raise InsufficientDataError(f"rolling std window {window} exceeds length {arr.size}")
    shift = arr[:window].mean()
    centered = arr - shift
    c1 = np.concatenate([[0.0], np.cumsum(centered)])
    c2 = np.concatenate([[0.0], np.cumsum(centered * centered)])
    s1 = c1[window:] - c1[:-window]
    s2 = c2[window:] - c2[:-window]
    var = np.maximum(s2 - s1 * s1 / window, 0.0) / (window - ddof)
    values = np.full(arr.size, np.nan)
    values[window - 1:] = np.sqrt(var)
    return IndicatorSeries(values, window - 1)


def macd(close, fast: int = 12, slow: int = 26, signal: int = 9) -> Tuple[IndicatorSeries, IndicatorSeries]:
    """MACD line (EMA fast - EMA slow) and its EMA signal line."""
    if fast >= slow:
        raise ParameterError(f"fast window {fast} must be < slow window {slow}")
    arr = _as_1d(close)
    line = ema(arr, fast).values - ema(arr, slow).values
    sig = ema(line, signal)
    return IndicatorSeries(line, 0), sig


def rsi(close, window: int = 14) -> IndicatorSeries:
    """Relative strength index with smoothed up/down averages.

    RSI = 100 - 100/(1 + U/D); 100 when the down average is zero, 0 when
    the up average is zero, 50 when both are zero. Defined from index
    `window` (the first window price changes feed the seed averages).
    """
    _check_window(window)
    arr = _as_1d(close)
    if arr.size <= window:
        raise InsufficientDataError(f"rsi window {window} needs {window + 1} values, got {arr.size}")
    diff = np.diff(arr)
    up = np.maximum(diff, 0.0)
    down = np.maximum(-diff, 0.0)
    u = smma(up, window).values
    d = smma(down, window).values
    values = np.full(arr.size, np.nan)
    u_t, d_t = u[window - 1:], d[window - 1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        core = 100.0 - 100.0 / (1.0 + u_t / d_t)
    core = np.where(d_t == 0.0, np.where(u_t == 0.0, 50.0, 100.0), core)
    values[window:] = core
    return IndicatorSeries(values, window)


@dataclass(frozen=True)
class BollingerBands:
    lower: IndicatorSeries
    middle: IndicatorSeries
    upper: IndicatorSeries


def bollinger(close, window: int = 20, k: float = 2.0) -> BollingerBands:
    """Bollinger bands: SMA middle, +-k population standard deviations."""
    mid = rolling_mean(close, window)
    sd = rolling_std(close, window, ddof=0)
    return BollingerBands(
        lower=IndicatorSeries(mid.values - k * sd.values, mid.defined_from),
        middle=mid,
        upper=IndicatorSeries(mid.values + k * sd.values, mid.defined_from),
    )
