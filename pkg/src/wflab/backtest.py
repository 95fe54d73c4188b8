"""Fee-aware equity accounting, evaluation metrics, and the IR t-test.

Equity starts at 1 and compounds per interval:

    E_t = E_{t-1} * (1 + r_t * p_t) * (1 - |p_t - p_{t-1}| * fee)

with the boundary position p_0 = 0 and a terminal close factor
(1 - |p_T| * fee) folded into the final curve point, so every run ends
flat. Net strategy returns are equity ratios, E_t / E_{t-1} - 1, and all
annualized metrics scale by Y, the number of intervals per year.

Degenerate metric cases (zero ASD or zero drawdown with nonzero ARC)
produce NaN and are listed in the report's `degenerate` field instead of
raising.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy.special import ndtr

from .errors import AlignmentError, InsufficientDataError, ParameterError, ShapeError
from .strategies import PositionSeries

PositionsLike = Union[PositionSeries, np.ndarray, Sequence[int]]


@dataclass(frozen=True)
class BacktestReport:
    equity_curve: np.ndarray  # E_0..E_T, T+1 points
    final_value: float
    arc: float
    asd: float
    ir_star: float
    md: float
    ir_double_star: float
    n_trades: int
    long_pct: float
    short_pct: float
    intervals_per_year: float
    net_returns: np.ndarray  # E_t/E_{t-1} - 1, length T
    degenerate: Tuple[str, ...]  # metric names that hit a 0/0-style case


@dataclass(frozen=True)
class TTestResult:
    t: float
    p_value: float
    ir_diff: float
    sigma: float
    n: int
    significance: str  # "***" p<0.01, "**" p<0.05, "*" p<0.1
    degenerate: bool


@dataclass(frozen=True)
class WindowSegment:
    """One test slice of a walk-forward run, anchored at a global row index."""

    start: int
    returns: np.ndarray
    positions: np.ndarray

    def __len__(self) -> int:
        return self.returns.shape[0]


def _positions_array(positions: PositionsLike) -> np.ndarray:
    if isinstance(positions, PositionSeries):
        return positions.positions
    return np.asarray(positions)


def equity_curve(returns, positions: PositionsLike, fee: float) -> np.ndarray:
    """E_0..E_T including transaction fees and the terminal close."""
    r = np.asarray(returns, dtype=np.float64)
    p = _positions_array(positions).astype(np.float64)
    if r.shape != p.shape or r.ndim != 1:
        raise ShapeError(f"returns {r.shape} and positions {p.shape} must be equal 1-d")
    if not 0.0 <= fee < 1.0:
        raise ParameterError(f"fee must be in [0, 1), got {fee}")
    if r.size == 0:
        raise ParameterError("need at least one interval")
    turnover = np.abs(np.diff(p, prepend=0.0))
    growth = (1.0 + r * p) * (1.0 - turnover * fee)
    growth[-1] *= 1.0 - abs(p[-1]) * fee  # close out after the last interval
    curve = np.empty(r.size + 1)
    curve[0] = 1.0
    np.cumprod(growth, out=curve[1:])
    return curve


def net_returns(equity: np.ndarray) -> np.ndarray:
    """Per-interval net returns from an equity curve: E_t/E_{t-1} - 1."""
    equity = np.asarray(equity, dtype=np.float64)
    return equity[1:] / equity[:-1] - 1.0


def arc(final_value: float, n_intervals: int, intervals_per_year: float) -> float:
    """Annualized rate of change: (E_T)^(Y/T) - 1."""
    if final_value <= 0:
        raise ParameterError(f"final value must be positive, got {final_value}")
    if n_intervals < 1:
        raise ParameterError(f"need at least one interval, got {n_intervals}")
    try:
        # log space keeps precision near E_T = 1 and makes overflow explicit
        return math.expm1(intervals_per_year / n_intervals * math.log(final_value))
    except OverflowError:
        return math.inf


def asd(returns, intervals_per_year: float) -> float:
    """Annualized standard deviation: sqrt((Y/T) * sum((r - mean)^2))."""
    r = np.asarray(returns, dtype=np.float64)
    if r.size < 2:
        raise InsufficientDataError(f"need at least 2 returns, got {r.size}")
    if r.min() == r.max():  # exact zero for constant series, no mean roundoff
        return 0.0
    centered = r - r.mean()
    return float(math.sqrt(intervals_per_year / r.size * np.dot(centered, centered)))


def ir_star(arc_value: float, asd_value: float) -> float:
    """Information ratio ARC/ASD; 0 when both vanish, NaN when only ASD does."""
    if asd_value < 0:
        raise ParameterError(f"asd must be nonnegative, got {asd_value}")
    if asd_value == 0.0:
        return 0.0 if arc_value == 0.0 else math.nan
    return arc_value / asd_value


def max_drawdown(equity) -> float:
    """Largest peak-to-trough relative decline, 0 for non-decreasing curves."""
    e = np.asarray(equity, dtype=np.float64)
    if e.size == 0 or np.any(e <= 0):
        raise ParameterError("equity values must be positive")
    peaks = np.maximum.accumulate(e)
    return float(np.max((peaks - e) / peaks))


def ir_double_star(ir_star_value: float, arc_value: float, md_value: float) -> float:
    """Drawdown-adjusted ratio IR* * |ARC| / MD; 0 for no-trade curves."""
    if md_value < 0:
        raise ParameterError(f"md must be nonnegative, got {md_value}")
    if md_value == 0.0:
        return 0.0 if arc_value == 0.0 else math.nan
    return ir_star_value * abs(arc_value) / md_value


def n_trades(positions: PositionsLike) -> int:
    """Position changes including the implicit open from 0 and terminal close."""
    p = _positions_array(positions).astype(np.int64)
    if p.size == 0:
        return 0
    return int(np.abs(np.diff(p, prepend=0)).sum() + abs(int(p[-1])))


def long_short_pct(positions: PositionsLike) -> Tuple[float, float]:
    """Percent of intervals spent long and short."""
    p = _positions_array(positions).astype(np.float64)
    if p.size == 0:
        return 0.0, 0.0
    long_frac = float(np.mean((p + 1.0) * p * p / 2.0))
    short_frac = float(np.mean((1.0 - p) * p * p / 2.0))
    return 100.0 * long_frac, 100.0 * short_frac


def run_backtest(
    returns,
    positions: PositionsLike,
    fee: float,
    intervals_per_year: float,
) -> BacktestReport:
    """Equity pass plus the full metric suite for one position sequence."""
    curve = equity_curve(returns, positions, fee)
    p = _positions_array(positions)
    net = net_returns(curve)
    final_value = float(curve[-1])
    n_intervals = net.size
    arc_value = arc(final_value, n_intervals, intervals_per_year)
    asd_value = asd(net, intervals_per_year)
    ir1 = ir_star(arc_value, asd_value)
    md_value = max_drawdown(curve)
    ir2 = ir_double_star(ir1, arc_value, md_value)
    degenerate: List[str] = []
    if math.isnan(ir1):
        degenerate.append("ir_star")
    if math.isnan(ir2):
        degenerate.append("ir_double_star")
    long_pct, short_pct = long_short_pct(p)
    return BacktestReport(
        equity_curve=curve,
        final_value=final_value,
        arc=arc_value,
        asd=asd_value,
        ir_star=ir1,
        md=md_value,
        ir_double_star=ir2,
        n_trades=n_trades(p),
        long_pct=long_pct,
        short_pct=short_pct,
        intervals_per_year=intervals_per_year,
        net_returns=net,
        degenerate=tuple(degenerate),
    )


def concat_windows(
    segments: Sequence[WindowSegment],
    fee: float,
    intervals_per_year: float,
) -> BacktestReport:
    """Combined report over contiguous test slices.

    Positions are concatenated in time and the equity recursion runs once
    over the whole sequence, so a position held across a boundary pays no
    phantom close/reopen fee; the single terminal close lands after the
    last window.
    """
    if not segments:
        raise AlignmentError("no window segments to combine")
    for seg in segments:
        if seg.returns.shape != seg.positions.shape:
            raise ShapeError(
                f"segment at {seg.start}: returns {seg.returns.shape} vs "
                f"positions {seg.positions.shape}"
            )
    ordered = sorted(segments, key=lambda s: s.start)
    for prev, cur in zip(ordered, ordered[1:]):
        expected = prev.start + len(prev)
        if cur.start != expected:
            kind = "overlap" if cur.start < expected else "gap"
            raise AlignmentError(
                f"{kind} between windows: segment at {prev.start} ends at "
                f"{expected}, next starts at {cur.start}"
            )
    all_returns = np.concatenate([s.returns for s in ordered])
    all_positions = np.concatenate([s.positions for s in ordered])
    return run_backtest(all_returns, all_positions, fee, intervals_per_year)


def ir_t_statistic(ir_diff: float, sigma: float, n: int) -> float:
    """t = (IR*_s - IR*_b) / (sigma / sqrt(N)) from summary numbers."""
    if n < 1:
        raise ParameterError(f"need at least one observation, got {n}")
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    return ir_diff / (sigma / math.sqrt(n))


def _stars(p_value: float) -> str:
    if p_value < 0.01:
        return "***"
    if p_value < 0.05:
        return "**"
    if p_value < 0.1:
        return "*"
    return ""


def ir_t_test(
    strategy_net,
    benchmark_net,
    ir_strategy: float,
    ir_benchmark: float,
) -> TTestResult:
    """One-sided test of IR*_s > IR*_b using excess-return dispersion.

    sigma is the sample standard deviation of the per-interval excess
    returns; the p-value uses the normal approximation.
    """
    s = np.asarray(strategy_net, dtype=np.float64)
    b = np.asarray(benchmark_net, dtype=np.float64)
    if s.shape != b.shape or s.ndim != 1:
        raise ShapeError(f"return streams differ: {s.shape} vs {b.shape}")
    if s.size < 2:
        raise InsufficientDataError(f"need at least 2 returns, got {s.size}")
    diff = s - b
    sigma = float(np.std(diff, ddof=1))
    ir_diff = ir_strategy - ir_benchmark
    n = s.size
    if sigma == 0.0:
        if ir_diff == 0.0:
            return TTestResult(0.0, 0.5, 0.0, 0.0, n, "", False)
        return TTestResult(math.nan, math.nan, ir_diff, 0.0, n, "", True)
    t = ir_t_statistic(ir_diff, sigma, n)
    p_value = float(1.0 - ndtr(t))
    return TTestResult(t, p_value, ir_diff, sigma, n, _stars(p_value), False)
