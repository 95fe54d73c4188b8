"""Hyperparameter search: exhaustive grids and seeded random sampling.

Strategy sweeps rank candidates by the drawdown-adjusted information
ratio of a validation backtest; higher is better, ties go to the
combination with fewer trades and then to the earlier grid position.
Model sweeps rank by validation loss, lower first. A failed evaluation
is logged and excluded from the ranking instead of aborting the sweep.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from .backtest import BacktestReport
from .errors import ParameterError, SearchError

log = logging.getLogger("wflab.search")

METRICS = ("ir_double_star", "validation_loss")

Combination = Dict[str, Any]


@dataclass(frozen=True)
class SearchSpace:
    """Finite grid of named parameter axes with optional constraints.

    Axis values may include None where a parameter can be switched off
    entirely. Constraints are pure predicates over a full combination;
    only combinations passing all of them get evaluated, and both the
    raw and surviving counts are reported on the result.
    """

    axes: Tuple[Tuple[str, Tuple[Any, ...]], ...]
    constraints: Tuple[Callable[[Combination], bool], ...] = ()

    def __post_init__(self) -> None:
        if not self.axes:
            raise ParameterError("a search space needs at least one axis")
        seen = set()
        for name, values in self.axes:
            if len(values) == 0:
                raise ParameterError(f"axis {name!r} has no values")
            if name in seen:
                raise ParameterError(f"duplicate axis name {name!r}")
            seen.add(name)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.axes)

    @property
    def raw_size(self) -> int:
        size = 1
        for _, values in self.axes:
            size *= len(values)
        return size

    def combination(self, flat_index: int) -> Combination:
        """Unrank a grid position into a combination; last axis fastest."""
        if not 0 <= flat_index < self.raw_size:
            raise ParameterError(
                f"flat index {flat_index} outside grid of size {self.raw_size}"
            )
        picked: Dict[str, Any] = {}
        remaining = flat_index
        for name, values in reversed(self.axes):
            remaining, position = divmod(remaining, len(values))
            picked[name] = values[position]
        return {name: picked[name] for name, _ in self.axes}

    def satisfies(self, combination: Combination) -> bool:
        return all(check(combination) for check in self.constraints)

    def iter_valid(self) -> Iterator[Tuple[int, Combination]]:
        """All constraint-satisfying combinations in grid order."""
        for index in range(self.raw_size):
            combination = self.combination(index)
            if self.satisfies(combination):
                yield index, combination

    def valid_indices(self) -> List[int]:
        return [index for index, _ in self.iter_valid()]


@dataclass(frozen=True)
class Evaluation:
    """One scored combination; report or score is set unless it failed."""

    index: int
    combination: Combination
    report: Optional[BacktestReport] = None
    score: Optional[float] = None
    error: Optional[str] = None


@dataclass(frozen=True)
class SearchResult:
    """Ranked successful evaluations plus whatever failed along the way."""

    metric: str
    raw_size: int
    valid_size: int
    evaluations: Tuple[Evaluation, ...]
    failures: Tuple[Evaluation, ...] = ()
    seed: Optional[int] = None


def _rank_key(metric: str, evaluation: Evaluation) -> Tuple[int, float, int, int]:
    """Sort key; smaller is better. NaN outcomes sink below everything."""
    if metric == "ir_double_star":
        goodness = -float(evaluation.report.ir_double_star)
        trades = int(evaluation.report.n_trades)
    else:
        goodness = float(evaluation.score)
        trades = 0
    if math.isnan(goodness):
        return (1, 0.0, trades, evaluation.index)
    return (0, goodness, trades, evaluation.index)


def _check_metric(metric: str) -> None:
    if metric not in METRICS:
        raise ParameterError(f"unknown search metric {metric!r}; use one of {METRICS}")


def _evaluate_all(
    space: SearchSpace,
    indices: List[int],
    evaluate: Callable[[Combination], Any],
    metric: str,
) -> Tuple[Tuple[Evaluation, ...], Tuple[Evaluation, ...]]:
    scored: List[Evaluation] = []
    failed: List[Evaluation] = []
    for index in indices:
        combination = space.combination(index)
        try:
            outcome = evaluate(combination)
        except Exception as exc:  # a bad combination must not kill the sweep
            message = f"{type(exc).__name__}: {exc}"
            log.warning("combination %d %r failed: %s", index, combination, message)
            failed.append(Evaluation(index=index, combination=combination, error=message))
            continue
        if metric == "ir_double_star":
            scored.append(Evaluation(index=index, combination=combination, report=outcome))
        else:
            scored.append(
                Evaluation(index=index, combination=combination, score=float(outcome))
            )
    scored.sort(key=lambda evaluation: _rank_key(metric, evaluation))
    return tuple(scored), tuple(failed)


def grid_search(
    space: SearchSpace,
    evaluate: Callable[[Combination], Any],
    metric: str = "ir_double_star",
) -> SearchResult:
    """Evaluate every constraint-satisfying combination exactly once."""
    _check_metric(metric)
    indices = space.valid_indices()
    evaluations, failures = _evaluate_all(space, indices, evaluate, metric)
    return SearchResult(
        metric=metric,
        raw_size=space.raw_size,
        valid_size=len(indices),
        evaluations=evaluations,
        failures=failures,
    )


def random_search(
    space: SearchSpace,
    sample_size: int,
    seed: int,
    evaluate: Callable[[Combination], Any],
    metric: str = "ir_double_star",
) -> SearchResult:
    """Evaluate a uniform without-replacement sample of valid combinations."""
    _check_metric(metric)
    if sample_size < 1:
        raise ParameterError(f"sample size must be positive, got {sample_size}")
    valid = space.valid_indices()
    if sample_size > len(valid):
        raise SearchError(
            f"sample of {sample_size} exceeds the {len(valid)} valid combinations"
        )
    rng = np.random.default_rng(seed)
    positions = rng.choice(len(valid), size=sample_size, replace=False)
    indices = sorted(valid[position] for position in positions)
    evaluations, failures = _evaluate_all(space, indices, evaluate, metric)
    return SearchResult(
        metric=metric,
        raw_size=space.raw_size,
        valid_size=len(valid),
        evaluations=evaluations,
        failures=failures,
        seed=seed,
    )


def select_best(result: SearchResult) -> Combination:
    """The rank-1 combination; requires at least one success."""
    if not result.evaluations:
        raise SearchError("every evaluation failed; nothing to select")
    return result.evaluations[0].combination


def top_n(result: SearchResult, n: int) -> List[Combination]:
    """The first n ranked combinations, fewer if the sweep was smaller."""
    if n < 1:
        raise ParameterError(f"n must be at least 1, got {n}")
    return [evaluation.combination for evaluation in result.evaluations[:n]]
