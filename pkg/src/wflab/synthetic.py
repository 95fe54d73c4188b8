"""Synthetic candle series for demos and end-to-end smoke tests."""
from __future__ import annotations

import numpy as np

from .data.klines import CandleSeries
from .errors import ParameterError


def sine_returns(
    n: int,
    period: int,
    amplitude: float,
    noise: float,
    seed: int,
    drift: float = 0.0,
) -> np.ndarray:
    """Per-interval returns with a sinusoidal drift plus Gaussian noise.

    The slow sine makes the sign of the next return learnable from recent
    history, so a forecaster trained on these series has something to find.
    """
    if period < 2:
        raise ParameterError(f"period must be >= 2, got {period}")
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    r = drift + amplitude * np.sin(2.0 * np.pi * t / period) + rng.normal(0.0, noise, size=n)
    if np.any(r <= -1.0):
        raise ParameterError("returns at or below -100%; lower amplitude or noise")
    return r


def candles_from_returns(
    returns: np.ndarray,
    interval_ms: int,
    start_ms: int = 1_569_888_000_000,  # 2019-10-01 00:00:00 UTC
    start_price: float = 100.0,
    seed: int = 0,
) -> CandleSeries:
    """Build a dense candle series whose (close-open)/open equals `returns`."""
    returns = np.asarray(returns, dtype=np.float64)
    n = returns.size
    opens = np.empty(n)
    closes = np.empty(n)
    price = start_price
    growth = np.cumprod(1.0 + returns)
    opens[0] = start_price
    opens[1:] = start_price * growth[:-1]
    closes = start_price * growth
    rng = np.random.default_rng(seed)
    wiggle = np.abs(rng.normal(0.0, 0.001, size=n)) + 1e-6
    highs = np.maximum(opens, closes) * (1.0 + wiggle)
    lows = np.minimum(opens, closes) * (1.0 - wiggle)
    volume = rng.lognormal(0.0, 0.5, size=n) * 10.0
    open_time = start_ms + np.arange(n, dtype=np.int64) * interval_ms
    return CandleSeries(
        interval_ms=interval_ms,
        open_time=open_time,
        close_time=open_time + interval_ms - 1,
        open=opens,
        high=highs,
        low=lows,
        close=closes,
        volume=volume,
        synthetic=np.zeros(n, dtype=bool),
    )


def make_sine_candles(
    n: int,
    interval_ms: int,
    period: int = 480,
    amplitude: float = 0.004,
    noise: float = 0.002,
    seed: int = 7,
    drift: float = 0.0,
) -> CandleSeries:
    r = sine_returns(n, period, amplitude, noise, seed, drift)
    return candles_from_returns(r, interval_ms, seed=seed + 1)
