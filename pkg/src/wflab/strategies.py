"""Trading strategies emitting per-interval positions in {-1, 0, +1}.

Positions are causal: the position for interval t is decided from
indicator values at t-1 or from forecasts that only see data before t.
Before a strategy's inputs are defined the position is 0. Stateful
strategies evaluate their rules in a fixed priority order per interval
(enter long, exit long, enter short, exit short; first match wins) and
hold the previous position when nothing triggers.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .errors import ConfigError, ParameterError
from .indicators import macd as macd_indicator
from .indicators import rsi as rsi_indicator


@dataclass(frozen=True)
class PositionSeries:
    positions: np.ndarray  # int8, one per interval
    first_active: int  # first index whose inputs were defined

    def __len__(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class ThresholdParams:
    """Entry/exit thresholds for forecast strategies; None disables a rule.

    For return-threshold strategies the entries are return levels
    (enter_long > 0, enter_short < 0, exit_long < 0, exit_short > 0).
    For the quantile strategy they are quantile levels in (0, 1) and
    `threshold` is the return magnitude the quantiles are compared to.
    """

    enter_long: Optional[float] = None
    exit_long: Optional[float] = None
    enter_short: Optional[float] = None
    exit_short: Optional[float] = None
    threshold: Optional[float] = None


def _scan(
    enter_long: np.ndarray,
    exit_long: np.ndarray,
    enter_short: np.ndarray,
    exit_short: np.ndarray,
    n: int,
    first_active: int,
) -> np.ndarray:
    """Priority-ordered stateful scan over per-interval trigger booleans."""
    positions = np.zeros(n, dtype=np.int8)
    state = np.int8(0)
    candidates = np.nonzero(enter_long | exit_long | enter_short | exit_short)[0]
    prev = 0
    for i in candidates:
        if state != 0 or prev < i:
            positions[prev:i] = state
        if enter_long[i]:
            state = np.int8(1)
        elif exit_long[i] and state == 1:
            state = np.int8(0)
        elif enter_short[i]:
            state = np.int8(-1)
        elif exit_short[i] and state == -1:
            state = np.int8(0)
        # otherwise hold
        prev = i
    positions[prev:] = state
    # Anything before the first defined input stays flat.
    if first_active > 0:
        positions[:first_active] = 0
    return positions


def buy_and_hold(n: int) -> PositionSeries:
    """Long one unit from the first interval to the last."""
    if n < 1:
        raise ParameterError(f"need at least one interval, got {n}")
    return PositionSeries(np.ones(n, dtype=np.int8), 0)


def macd_strategy(
    close,
    fast: int,
    slow: int,
    signal: int,
    short: bool = False,
) -> PositionSeries:
    """Long while MACD >= signal line (previous interval); else flat or short."""
    line, sig = macd_indicator(close, fast, slow, signal)
    n = len(line)
    positions = np.zeros(n, dtype=np.int8)
    if n > 1:
        above = line.values[:-1] >= sig.values[:-1]
        positions[1:] = np.where(above, 1, -1 if short else 0).astype(np.int8)
    return PositionSeries(positions, 1)


def rsi_strategy(
    close,
    window: int,
    enter_long: Optional[float] = None,
    exit_long: Optional[float] = None,
    enter_short: Optional[float] = None,
    exit_short: Optional[float] = None,
) -> PositionSeries:
    """Overbought-momentum RSI rules on the previous interval's RSI.

    Enter long above enter_long; exit long below exit_long; enter short
    below enter_short; exit short above exit_short. None disables a rule.
    """
    series = rsi_indicator(close, window)
    n = len(series)
    r = np.full(n, np.nan)
    r[1:] = series.values[:-1]  # decide at t from RSI at t-1
    with np.errstate(invalid="ignore"):
        el = r > enter_long if enter_long is not None else np.zeros(n, dtype=bool)
        xl = r < exit_long if exit_long is not None else np.zeros(n, dtype=bool)
        es = r < enter_short if enter_short is not None else np.zeros(n, dtype=bool)
        xs = r > exit_short if exit_short is not None else np.zeros(n, dtype=bool)
    first_active = series.defined_from + 1
    return PositionSeries(_scan(el, xl, es, xs, n, first_active), first_active)


def threshold_forecast_strategy(forecasts, params: ThresholdParams) -> PositionSeries:
    """Return-forecast thresholds: ŷ_t above enter_long opens a long, below
    enter_short opens a short; exits fire while the matching side is held."""
    y = np.asarray(forecasts, dtype=np.float64)
    if y.ndim != 1:
        raise ParameterError(f"expected 1-d forecasts, got shape {y.shape}")
    _validate_return_thresholds(params)
    n = y.size
    el = y > params.enter_long if params.enter_long is not None else np.zeros(n, dtype=bool)
    xl = y < params.exit_long if params.exit_long is not None else np.zeros(n, dtype=bool)
    es = y < params.enter_short if params.enter_short is not None else np.zeros(n, dtype=bool)
    xs = y > params.exit_short if params.exit_short is not None else np.zeros(n, dtype=bool)
    return PositionSeries(_scan(el, xl, es, xs, n, 0), 0)


def _validate_return_thresholds(params: ThresholdParams) -> None:
    if params.enter_long is not None and params.enter_long <= 0:
        raise ParameterError(f"enter_long must be > 0, got {params.enter_long}")
    if params.enter_short is not None and params.enter_short >= 0:
        raise ParameterError(f"enter_short must be < 0, got {params.enter_short}")


def quantile_forecast_strategy(
    quantile_forecasts: Dict[float, np.ndarray],
    params: ThresholdParams,
) -> PositionSeries:
    """Quantile-forecast rules at confidence levels against +-threshold.

    Long when the (1 - enter_long) quantile exceeds +threshold; exit long
    when the exit_long quantile drops below -threshold; short when the
    enter_short quantile is below -threshold; exit short when the
    (1 - exit_short) quantile exceeds +threshold.
    """
    if params.threshold is None or params.threshold <= 0:
        raise ConfigError(f"quantile strategy needs a positive threshold, got {params.threshold}")
    for name in ("enter_long", "exit_long", "enter_short", "exit_short"):
        level = getattr(params, name)
        if level is not None and not 0.0 < level < 1.0:
            raise ConfigError(f"{name} quantile level must be in (0, 1), got {level}")
    n = None
    for v in quantile_forecasts.values():
        n = np.asarray(v).shape[0]
        break
    if n is None:
        raise ConfigError("no quantile forecasts supplied")
    thr = params.threshold

    def rule(level: Optional[float], transform, compare):
        if level is None:
            return np.zeros(n, dtype=bool)
        series = _lookup_level(quantile_forecasts, transform(level))
        return compare(series)

    el = rule(params.enter_long, lambda q: 1.0 - q, lambda s: s > thr)
    xl = rule(params.exit_long, lambda q: q, lambda s: s < -thr)
    es = rule(params.enter_short, lambda q: q, lambda s: s < -thr)
    xs = rule(params.exit_short, lambda q: 1.0 - q, lambda s: s > thr)
    return PositionSeries(_scan(el, xl, es, xs, n, 0), 0)


def _lookup_level(forecasts: Dict[float, np.ndarray], level: float) -> np.ndarray:
    for key, values in forecasts.items():
        if abs(key - level) < 1e-9:
            return np.asarray(values, dtype=np.float64)
    available = ", ".join(f"{k:g}" for k in sorted(forecasts))
    raise ConfigError(f"quantile level {level:g} not among forecast levels [{available}]")
