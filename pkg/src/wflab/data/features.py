"""Model input features derived from a gap-free candle series.

Real-valued columns: raw OHLCV, returns, optional exogenous values, price
ratios to close, return volatilities over 1h/1d/7d of intervals, SMA and
EMA ratios to close, MACD(12,26,9), RSI(14), and Bollinger(20,2) band
ratios. Categorical columns: hour of day and weekday, both taken from the
candle close time in UTC.

The first `warmup` rows (7 days of intervals, the longest lookback) may
contain NaN and are kept in the frame but excluded from model samples and
normalization.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..errors import ConfigError, DataError, InsufficientDataError
from ..indicators import bollinger, ema, macd, rolling_mean, rolling_std, rsi
from ..intervals import MS_PER_DAY, MS_PER_HOUR
from .exogenous import ExogenousSeries, align_exogenous
from .klines import CandleSeries, compute_returns

MACD_PARAMS = (12, 26, 9)
RSI_WINDOW = 14
BOLLINGER_PARAMS = (20, 2.0)

CAT_NAMES = ("hour", "weekday")
CAT_SIZES = (24, 7)


@dataclass
class FeatureFrame:
    """Per-interval model inputs plus the return series used for equity."""

    interval_ms: int
    open_time: np.ndarray
    close_time: np.ndarray
    real: np.ndarray  # (rows, num_real) float64
    real_names: Tuple[str, ...]
    cats: np.ndarray  # (rows, 2) int64: hour, weekday
    warmup: int

    def __len__(self) -> int:
        return self.real.shape[0]

    @property
    def num_real(self) -> int:
        return self.real.shape[1]

    @property
    def n_valid(self) -> int:
        return len(self) - self.warmup

    @property
    def returns(self) -> np.ndarray:
        return self.real[:, self.real_names.index("returns")]

    def column(self, name: str) -> np.ndarray:
        return self.real[:, self.real_names.index(name)]


def horizon_rows(interval_ms: int) -> Tuple[int, int, int]:
    """Intervals per hour, day, and 7 days; the interval must subdivide an hour."""
    if MS_PER_HOUR % interval_ms != 0:
        raise ConfigError(f"interval {interval_ms} ms must divide one hour evenly")
    per_hour = MS_PER_HOUR // interval_ms
    if per_hour < 2:
        raise ConfigError("interval too coarse: volatility features need >= 2 intervals per hour")
    return per_hour, MS_PER_DAY // interval_ms, 7 * MS_PER_DAY // interval_ms


def build_features(
    series: CandleSeries, exogenous: Sequence[ExogenousSeries] = ()
) -> FeatureFrame:
    """Assemble the feature frame from a dense candle series.

    Requires gap-filled input (consecutive open times exactly one interval
    apart). Exogenous columns appear in caller order after `returns`.
    """
    step = series.interval_ms
    if len(series) < 2:
        raise InsufficientDataError("need at least 2 candles")
    if np.any(np.diff(series.open_time) != step):
        raise DataError("candle series has gaps; run fill_gaps first")
    per_hour, per_day, per_7d = horizon_rows(step)
    if len(series) <= per_7d:
        raise InsufficientDataError(
            f"need more than {per_7d} candles (7 days of warm-up), got {len(series)}"
        )

    close = series.close
    returns = compute_returns(series)
    names: list[str] = []
    cols: list[np.ndarray] = []

    def put(name: str, values: np.ndarray) -> None:
        names.append(name)
        cols.append(np.asarray(values, dtype=np.float64))

    put("open", series.open)
    put("high", series.high)
    put("low", series.low)
    put("close", close)
    put("volume", series.volume)
    put("returns", returns)
    for exo in exogenous:
        put(exo.name, align_exogenous(series.open_time, exo))
    put("open_to_close", series.open / close)
    put("high_to_close", series.high / close)
    put("low_to_close", series.low / close)
    put("vol_1h", rolling_std(returns, per_hour, ddof=1).values)
    put("vol_1d", rolling_std(returns, per_day, ddof=1).values)
    put("vol_7d", rolling_std(returns, per_7d, ddof=1).values)
    put("sma_1h_to_close", rolling_mean(close, per_hour).values / close)
    put("sma_1d_to_close", rolling_mean(close, per_day).values / close)
    put("sma_7d_to_close", rolling_mean(close, per_7d).values / close)
    put("ema_1h_to_close", ema(close, per_hour).values / close)
    put("ema_1d_to_close", ema(close, per_day).values / close)
    line, signal = macd(close, *MACD_PARAMS)
    put("macd", line.values)
    put("macd_signal", signal.values)
    put("rsi", rsi(close, RSI_WINDOW).values)
    bands = bollinger(close, *BOLLINGER_PARAMS)
    put("low_bband_to_close", bands.lower.values / close)
    put("up_bband_to_close", bands.upper.values / close)
    put("mid_bband_to_close", bands.middle.values / close)

    real = np.column_stack(cols)
    warmup = per_7d
    tail = real[warmup:]
    if not np.isfinite(tail).all():
        bad = np.nonzero(~np.isfinite(tail).all(axis=0))[0]
        raise DataError(f"non-finite values after warm-up in columns {[names[i] for i in bad]}")

    hour = (series.close_time // MS_PER_HOUR) % 24
    # Epoch day 0 (1970-01-01) was a Thursday; weekday convention is Monday=0.
    weekday = (series.close_time // MS_PER_DAY + 3) % 7
    cats = np.column_stack([hour, weekday]).astype(np.int64)

    return FeatureFrame(
        interval_ms=step,
        open_time=series.open_time.copy(),
        close_time=series.close_time.copy(),
        real=real,
        real_names=tuple(names),
        cats=cats,
        warmup=warmup,
    )
