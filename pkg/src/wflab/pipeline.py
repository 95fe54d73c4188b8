"""Walk-forward evaluation: per-window hyperparameter selection on the
validation split, test-split scoring, and cross-window aggregation.

Each strategy starts every window flat, pays fees on every position
change, and is scored against a buy-and-hold benchmark over the same
concatenated test period. Forecast-driven strategies train one model per
window on the train split and read one-step-ahead forecasts for the
validation and test splits.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .backtest import BacktestReport, WindowSegment, concat_windows, run_backtest
from .data.features import FeatureFrame
from .data.windows import DataWindow, NormStats, Span
from .errors import ParameterError
from .informer import (
    InformerConfig,
    InformerModel,
    TrainingLog,
    forecasts_by_level,
    init_model,
    predict_series,
    train,
)
from .intervals import intervals_per_year
from .search import (
    Combination,
    SearchResult,
    SearchSpace,
    grid_search,
    random_search,
    select_best,
)
from .strategies import (
    ThresholdParams,
    buy_and_hold,
    macd_strategy,
    quantile_forecast_strategy,
    rsi_strategy,
    threshold_forecast_strategy,
)

INDICATOR_STRATEGIES = ("macd", "rsi")
FORECAST_STRATEGIES = ("informer_rmse", "informer_quantile", "informer_gmadl")
STRATEGIES = ("buy_and_hold",) + INDICATOR_STRATEGIES + FORECAST_STRATEGIES

LOSS_BY_STRATEGY = {
    "informer_rmse": "rmse",
    "informer_quantile": "quantile",
    "informer_gmadl": "gmadl",
}

Forecasts = Union[np.ndarray, Dict[float, np.ndarray]]


@dataclass(frozen=True)
class WindowEvaluation:
    """One window's outcome: what was chosen and how it scored."""

    window_index: int
    combination: Combination
    validation: BacktestReport
    test: BacktestReport
    segment: WindowSegment
    search: Optional[SearchResult] = None
    training_log: Optional[TrainingLog] = None
    model: Optional[InformerModel] = None
    test_forecasts: Optional[Forecasts] = None


@dataclass(frozen=True)
class WalkForwardResult:
    strategy: str
    windows: Tuple[WindowEvaluation, ...]
    combined: BacktestReport
    benchmark: BacktestReport  # buy-and-hold over the same test period
    intervals_per_year: float


def threshold_params(combination: Combination) -> ThresholdParams:
    """Threshold/quantile rule parameters from a search combination."""
    return ThresholdParams(
        enter_long=combination.get("enter_long"),
        exit_long=combination.get("exit_long"),
        enter_short=combination.get("enter_short"),
        exit_short=combination.get("exit_short"),
        threshold=combination.get("threshold"),
    )


def span_positions(
    strategy: str,
    frame: FeatureFrame,
    span: Span,
    combination: Combination,
    forecasts: Optional[Forecasts] = None,
) -> np.ndarray:
    """Positions over a window span, one per row, starting from flat.

    Indicator strategies see the full price history up to each decision
    row, so their warm-up happened before the span and they may take a
    position on the very first row.
    """
    if strategy == "buy_and_hold":
        return buy_and_hold(len(span)).positions
    if strategy == "macd":
        series = macd_strategy(
            frame.column("close")[: span.stop],
            fast=combination["fast"],
            slow=combination["slow"],
            signal=combination["signal"],
            short=bool(combination.get("short", False)),
        )
        return series.positions[span.start : span.stop]
    if strategy == "rsi":
        series = rsi_strategy(
            frame.column("close")[: span.stop],
            window=combination["window"],
            enter_long=combination.get("enter_long"),
            exit_long=combination.get("exit_long"),
            enter_short=combination.get("enter_short"),
            exit_short=combination.get("exit_short"),
        )
        return series.positions[span.start : span.stop]
    if strategy in FORECAST_STRATEGIES:
        if forecasts is None:
            raise ParameterError(f"{strategy} needs forecasts for the span")
        params = threshold_params(combination)
        if strategy == "informer_quantile":
            return quantile_forecast_strategy(forecasts, params).positions
        return threshold_forecast_strategy(forecasts, params).positions
    raise ParameterError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


def span_forecasts(
    model: InformerModel,
    frame: FeatureFrame,
    normalization: NormStats,
    span: Span,
) -> Forecasts:
    """One-step-ahead forecasts aligned to a span, one row each.

    The model reads its past window from the rows before the span, so
    the span start must sit at least past_window rows into the frame's
    feature-complete region.
    """
    n = model.config.past_window
    predictions = predict_series(
        model, frame, normalization, span.start - n, span.stop
    )
    if model.config.loss_kind == "quantile":
        return forecasts_by_level(predictions, model.config.quantile_levels)
    return predictions[:, 0]


def window_seeds(master_seed: int, n_windows: int) -> List[int]:
    """Independent per-window training seeds derived from one master seed."""
    sequences = np.random.SeedSequence(master_seed).spawn(n_windows)
    return [int(seq.generate_state(1)[0]) for seq in sequences]


def _window_forecast_context(
    strategy: str,
    frame: FeatureFrame,
    window: DataWindow,
    model_config: Optional[InformerConfig],
    pretrained: Optional[InformerModel],
    seed: int,
) -> Tuple[Optional[Forecasts], Optional[Forecasts], Optional[InformerModel], Optional[TrainingLog]]:
    if strategy not in FORECAST_STRATEGIES:
        return None, None, None, None
    log = None
    if pretrained is not None:
        model = pretrained
    else:
        if model_config is None:
            raise ParameterError(f"{strategy} needs model_config or a pretrained model")
        expected = LOSS_BY_STRATEGY[strategy]
        if model_config.loss_kind != expected:
            raise ParameterError(
                f"{strategy} requires loss_kind {expected!r}, "
                f"config has {model_config.loss_kind!r}"
            )
        model = init_model(model_config, seed)
        model, log = train(model, frame, window, seed)
    validation = span_forecasts(model, frame, window.normalization, window.validation)
    test = span_forecasts(model, frame, window.normalization, window.test)
    return validation, test, model, log


def evaluate_window(
    strategy: str,
    frame: FeatureFrame,
    window: DataWindow,
    fee: float,
    space: Optional[SearchSpace] = None,
    params: Optional[Combination] = None,
    model_config: Optional[InformerConfig] = None,
    pretrained: Optional[InformerModel] = None,
    seed: int = 0,
) -> WindowEvaluation:
    """Select hyperparameters on validation, then score the test split.

    Pass a space to search, or fixed params to skip selection; exactly
    one of the two. Buy-and-hold accepts neither.
    """
    if strategy == "buy_and_hold":
        space, params = None, {}
    if (space is None) == (params is None):
        raise ParameterError("pass exactly one of space or params")
    year = intervals_per_year(frame.interval_ms)
    returns = frame.returns
    val_fc, test_fc, model, log = _window_forecast_context(
        strategy, frame, window, model_config, pretrained, seed
    )

    if space is not None:
        def evaluate(combination: Combination) -> BacktestReport:
            positions = span_positions(
                strategy, frame, window.validation, combination, val_fc
            )
            return run_backtest(
                returns[window.validation.slice], positions, fee, year
            )

        search = grid_search(space, evaluate)
        chosen = select_best(search)
        val_report = search.evaluations[0].report
    else:
        search = None
        chosen = dict(params)
        positions = span_positions(strategy, frame, window.validation, chosen, val_fc)
        val_report = run_backtest(returns[window.validation.slice], positions, fee, year)

    test_positions = span_positions(strategy, frame, window.test, chosen, test_fc)
    test_report = run_backtest(returns[window.test.slice], test_positions, fee, year)
    segment = WindowSegment(
        start=window.test.start,
        returns=returns[window.test.slice],
        positions=test_positions,
    )
    return WindowEvaluation(
        window_index=window.index,
        combination=chosen,
        validation=val_report,
        test=test_report,
        segment=segment,
        search=search,
        training_log=log,
        model=model,
        test_forecasts=test_fc,
    )


def walk_forward(
    strategy: str,
    frame: FeatureFrame,
    windows: Sequence[DataWindow],
    fee: float,
    space: Optional[SearchSpace] = None,
    params: Optional[Combination] = None,
    model_config: Optional[InformerConfig] = None,
    models: Optional[Sequence[InformerModel]] = None,
    seed: int = 0,
) -> WalkForwardResult:
    """Evaluate one strategy across all windows and combine the test slices."""
    if strategy not in STRATEGIES:
        raise ParameterError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    if not windows:
        raise ParameterError("need at least one window")
    if models is not None and len(models) != len(windows):
        raise ParameterError(
            f"got {len(models)} pretrained models for {len(windows)} windows"
        )
    seeds = window_seeds(seed, len(windows))
    evaluations = []
    for k, window in enumerate(windows):
        evaluations.append(
            evaluate_window(
                strategy,
                frame,
                window,
                fee,
                space=space,
                params=params,
                model_config=model_config,
                pretrained=models[k] if models is not None else None,
                seed=seeds[k],
            )
        )
    return combine_evaluations(strategy, frame, evaluations, fee)


def combine_evaluations(
    strategy: str,
    frame: FeatureFrame,
    evaluations: List[WindowEvaluation],
    fee: float,
) -> WalkForwardResult:
    """Aggregate window evaluations into one result with its benchmark."""
    year = intervals_per_year(frame.interval_ms)
    segments = [e.segment for e in evaluations]
    combined = concat_windows(segments, fee, year)
    all_returns = np.concatenate([s.returns for s in sorted(segments, key=lambda s: s.start)])
    bench_positions = buy_and_hold(all_returns.size).positions
    benchmark = run_backtest(all_returns, bench_positions, fee, year)
    return WalkForwardResult(
        strategy=strategy,
        windows=tuple(evaluations),
        combined=combined,
        benchmark=benchmark,
        intervals_per_year=year,
    )


def model_search(
    base_config: InformerConfig,
    space: SearchSpace,
    frame: FeatureFrame,
    window: DataWindow,
    sample_size: int,
    seed: int,
) -> SearchResult:
    """Random model-configuration search ranked by validation loss.

    Runs on a single window (canonically the first); the winning
    combination is meant to be reused for every other window. Axis names
    must be model-configuration field names.
    """

    def evaluate(combination: Combination) -> float:
        config = replace(base_config, **combination)
        model = init_model(config, seed)
        _, log = train(model, frame, window, seed)
        return log.best_val_loss

    return random_search(space, sample_size, seed, evaluate, metric="validation_loss")


def apply_model_combination(
    base_config: InformerConfig, combination: Combination
) -> InformerConfig:
    """A model config with search-space fields replaced."""
    return replace(base_config, **combination)


def top_n_walk_forward(
    result: WalkForwardResult,
    frame: FeatureFrame,
    fee: float,
    n: int,
) -> List[Tuple[int, BacktestReport]]:
    """Combined test report per validation rank 1..n.

    Rank r uses each window's r-th best validation combination (clamped
    to the window's list if shorter), re-scoring the test splits. Rank 1
    reproduces the base result. Requires a result produced with a search
    space; forecast strategies reuse each window's stored test forecasts.
    """
    if n < 1:
        raise ParameterError(f"n must be at least 1, got {n}")
    year = result.intervals_per_year
    rows = []
    for rank in range(1, n + 1):
        segments = []
        for evaluation in result.windows:
            if evaluation.search is None:
                raise ParameterError("top-n study needs per-window search results")
            ranked = evaluation.search.evaluations
            chosen = ranked[min(rank, len(ranked)) - 1].combination
            window_span = Span(
                evaluation.segment.start,
                evaluation.segment.start + len(evaluation.segment),
            )
            positions = span_positions(
                result.strategy, frame, window_span, chosen, evaluation.test_forecasts
            )
            segments.append(
                WindowSegment(
                    start=window_span.start,
                    returns=frame.returns[window_span.slice],
                    positions=positions,
                )
            )
        rows.append((rank, concat_windows(segments, fee, year)))
    return rows
