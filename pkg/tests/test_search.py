"""Search tests: unranking against itertools, constrained-count and argmax
brute-force oracles, tie rules, failure isolation, seeded-sampling
reproducibility, and chi-square uniformity of the random sampler."""
import itertools
import logging
import math

import numpy as np
import pytest
from scipy import stats

from wflab.backtest import BacktestReport, run_backtest
from wflab.errors import ParameterError, SearchError
from wflab.search import (
    Evaluation,
    SearchSpace,
    grid_search,
    random_search,
    select_best,
    top_n,
)

FIB = (2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987, 1597, 2584)


def macd_space():
    return SearchSpace(
        axes=(
            ("fast", FIB),
            ("slow", FIB),
            ("signal", FIB),
            ("short", (False, True)),
        ),
        constraints=(lambda c: c["fast"] < c["slow"],),
    )


def fake_report(ir, trades=0):
    """Report stub carrying only the fields the ranking reads."""
    return BacktestReport(
        equity_curve=np.ones(3),
        final_value=1.0,
        arc=0.0,
        asd=0.0,
        ir_star=0.0,
        md=0.0,
        ir_double_star=float(ir),
        n_trades=int(trades),
        long_pct=0.0,
        short_pct=0.0,
        intervals_per_year=105120.0,
        net_returns=np.zeros(2),
        degenerate=(),
    )


def oracle_better(a, b):
    """Pairwise preference: higher ratio, then fewer trades, then earlier.

    Entries are (index, ir, trades) triples; NaN loses to everything.
    """
    a_nan, b_nan = math.isnan(a[1]), math.isnan(b[1])
    if a_nan != b_nan:
        return b_nan
    if not a_nan and a[1] != b[1]:
        return a[1] > b[1]
    if a[2] != b[2]:
        return a[2] < b[2]
    return a[0] < b[0]


def oracle_best(entries):
    best = entries[0]
    for entry in entries[1:]:
        if oracle_better(entry, best):
            best = entry
    return best


class TestSearchSpace:
    def test_unranking_matches_itertools_product(self):
        axes = (
            ("a", (2, 5, 9)),
            ("b", (None, 0.1)),
            ("c", ("x", "y", "z", "w")),
        )
        space = SearchSpace(axes=axes)
        want = [
            {"a": a, "b": b, "c": c}
            for a, b, c in itertools.product(*(values for _, values in axes))
        ]
        got = [space.combination(i) for i in range(space.raw_size)]
        assert got == want
        assert space.raw_size == 3 * 2 * 4

    def test_names_in_axis_order(self):
        space = SearchSpace(axes=(("b", (1,)), ("a", (1, 2))))
        assert space.names == ("b", "a")

    def test_macd_constrained_count_matches_brute_force(self):
        space = macd_space()
        assert space.raw_size == 8192
        valid = space.valid_indices()
        brute = [
            (fast, slow, signal, short)
            for fast, slow, signal, short in itertools.product(
                FIB, FIB, FIB, (False, True)
            )
            if fast < slow
        ]
        assert len(valid) == len(brute) == 3840
        got = [tuple(space.combination(i).values()) for i in valid]
        assert got == brute

    def test_validation(self):
        with pytest.raises(ParameterError, match="at least one axis"):
            SearchSpace(axes=())
        with pytest.raises(ParameterError, match="no values"):
            SearchSpace(axes=(("a", ()),))
        with pytest.raises(ParameterError, match="duplicate"):
            SearchSpace(axes=(("a", (1,)), ("a", (2,))))
        space = SearchSpace(axes=(("a", (1, 2)),))
        with pytest.raises(ParameterError, match="outside"):
            space.combination(2)
        with pytest.raises(ParameterError, match="outside"):
            space.combination(-1)


class TestGridSearch:
    def test_matches_brute_force_on_random_toy_spaces(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            axes = tuple(
                (
                    f"p{k}",
                    # distinct values so every grid cell is a distinct dict
                    tuple(int(v) for v in rng.choice(50, rng.integers(2, 5), replace=False)),
                )
                for k in range(int(rng.integers(1, 4)))
            )
            space = SearchSpace(axes=axes)
            scores = rng.normal(size=space.raw_size)
            trades = rng.integers(0, 3, size=space.raw_size)

            def evaluate(combination, space=space, scores=scores, trades=trades):
                index = next(
                    i
                    for i in range(space.raw_size)
                    if space.combination(i) == combination
                )
                return fake_report(scores[index], trades[index])

            result = grid_search(space, evaluate)
            entries = [
                (i, float(scores[i]), int(trades[i])) for i in range(space.raw_size)
            ]
            best = oracle_best(entries)
            assert select_best(result) == space.combination(best[0])
            ranked = [e.index for e in result.evaluations]
            for left, right in zip(ranked, ranked[1:]):
                assert oracle_better(entries[left], entries[right]) or not oracle_better(
                    entries[right], entries[left]
                )

    def test_known_best_injection_on_macd_grid(self):
        space = macd_space()
        winner = {"fast": 13, "slow": 89, "signal": 5, "short": True}

        def evaluate(combination):
            return fake_report(9.0 if combination == winner else 0.1)

        result = grid_search(space, evaluate)
        assert select_best(result) == winner
        assert result.raw_size == 8192
        assert result.valid_size == 3840
        assert len(result.evaluations) == 3840
        assert result.seed is None

    def test_tie_broken_by_fewer_trades_then_order(self):
        space = SearchSpace(axes=(("a", (0, 1, 2)),))
        reports = {0: fake_report(1.0, 8), 1: fake_report(1.0, 3), 2: fake_report(1.0, 3)}
        result = grid_search(space, lambda c: reports[c["a"]])
        assert [e.combination["a"] for e in result.evaluations] == [1, 2, 0]

    def test_nan_ranks_last_inf_first(self):
        space = SearchSpace(axes=(("a", (0, 1, 2, 3)),))
        reports = {
            0: fake_report(math.nan),
            1: fake_report(math.inf),
            2: fake_report(-math.inf),
            3: fake_report(0.5),
        }
        result = grid_search(space, lambda c: reports[c["a"]])
        assert [e.combination["a"] for e in result.evaluations] == [1, 3, 2, 0]

    def test_best_invariant_under_positive_rescaling(self):
        space = SearchSpace(axes=(("a", tuple(range(12))),))
        rng = np.random.default_rng(3)
        scores = rng.normal(size=12)  # mixed signs
        plain = grid_search(space, lambda c: fake_report(scores[c["a"]]))
        scaled = grid_search(space, lambda c: fake_report(2.5 * scores[c["a"]]))
        assert select_best(plain) == select_best(scaled)
        assert [e.index for e in plain.evaluations] == [
            e.index for e in scaled.evaluations
        ]

    def test_failures_excluded_and_logged(self, caplog):
        space = SearchSpace(axes=(("a", (0, 1, 2, 3)),))

        def evaluate(combination):
            if combination["a"] % 2 == 0:
                raise ValueError(f"boom {combination['a']}")
            return fake_report(combination["a"])

        with caplog.at_level(logging.WARNING, logger="wflab.search"):
            result = grid_search(space, evaluate)
        assert [e.combination["a"] for e in result.evaluations] == [3, 1]
        assert sorted(e.combination["a"] for e in result.failures) == [0, 2]
        assert all("ValueError" in e.error for e in result.failures)
        assert sum("boom" in record.message for record in caplog.records) == 2

    def test_all_failed_select_raises(self):
        space = SearchSpace(axes=(("a", (0, 1)),))

        def evaluate(combination):
            raise RuntimeError("nope")

        result = grid_search(space, evaluate)
        assert result.evaluations == ()
        assert len(result.failures) == 2
        with pytest.raises(SearchError, match="failed"):
            select_best(result)

    def test_unknown_metric_rejected(self):
        space = SearchSpace(axes=(("a", (0,)),))
        with pytest.raises(ParameterError, match="metric"):
            grid_search(space, lambda c: fake_report(0.0), metric="sharpe")

    def test_real_backtest_reports_rank(self):
        returns = np.array([0.01, -0.02, 0.015, 0.005, -0.01, 0.02, 0.01, -0.005])
        candidates = {
            0: np.zeros(8, dtype=int),
            1: np.ones(8, dtype=int),
            2: -np.ones(8, dtype=int),
            3: np.sign(returns).astype(int),  # oracle positions, best ratio
        }
        space = SearchSpace(axes=(("p", (0, 1, 2, 3)),))

        def evaluate(combination):
            return run_backtest(
                returns, candidates[combination["p"]], fee=0.001, intervals_per_year=1000
            )

        result = grid_search(space, evaluate)
        entries = [
            (
                i,
                evaluate({"p": i}).ir_double_star,
                evaluate({"p": i}).n_trades,
            )
            for i in range(4)
        ]
        assert select_best(result) == {"p": oracle_best(entries)[0]}


class TestValidationLossMetric:
    def test_ranks_ascending_with_nan_last(self):
        space = SearchSpace(axes=(("a", (0, 1, 2, 3, 4)),))
        losses = {0: 0.7, 1: 0.2, 2: math.nan, 3: 0.2, 4: 0.05}
        result = grid_search(space, lambda c: losses[c["a"]], metric="validation_loss")
        assert [e.combination["a"] for e in result.evaluations] == [4, 1, 3, 0, 2]
        assert result.metric == "validation_loss"
        assert result.evaluations[0].score == 0.05
        assert result.evaluations[0].report is None

    def test_random_model_search_reproducible(self):
        space = SearchSpace(
            axes=(("lr", (1e-4, 3e-4, 1e-3)), ("dim", (8, 16, 32, 64)))
        )

        def evaluate(combination):
            return combination["lr"] * 100 + 1.0 / combination["dim"]

        first = random_search(space, 5, 11, evaluate, metric="validation_loss")
        second = random_search(space, 5, 11, evaluate, metric="validation_loss")
        assert [e.index for e in first.evaluations] == [e.index for e in second.evaluations]
        assert [e.score for e in first.evaluations] == [e.score for e in second.evaluations]
        assert select_best(first) == select_best(second)


class TestRandomSearch:
    def test_same_seed_identical_sample(self):
        space = macd_space()

        def score_by_values(combination):
            return fake_report(
                math.sin(
                    combination["fast"] * 0.3
                    + combination["slow"] * 0.07
                    + combination["signal"] * 1.9
                    + combination["short"]
                )
            )

        a = random_search(space, 40, 7, score_by_values)
        b = random_search(space, 40, 7, score_by_values)
        assert [e.index for e in a.evaluations] == [e.index for e in b.evaluations]
        assert [e.report.ir_double_star for e in a.evaluations] == [
            e.report.ir_double_star for e in b.evaluations
        ]
        assert a.seed == b.seed == 7

    def test_different_seed_different_sample(self):
        space = macd_space()
        samples = {
            seed: frozenset(
                e.index
                for e in random_search(
                    space, 30, seed, lambda c: fake_report(0.0)
                ).evaluations
            )
            for seed in range(4)
        }
        assert len(set(samples.values())) == 4

    def test_exhaustive_sample_equals_grid(self):
        space = SearchSpace(
            axes=(("a", (0, 1, 2, 3)), ("b", (0, 1, 2))),
            constraints=(lambda c: (c["a"] + c["b"]) % 2 == 0,),
        )

        def evaluate(combination):
            return fake_report(combination["a"] * 0.1 - combination["b"] * 0.03)

        grid = grid_search(space, evaluate)
        sampled = random_search(space, grid.valid_size, 5, evaluate)
        assert [e.index for e in sampled.evaluations] == [
            e.index for e in grid.evaluations
        ]
        assert select_best(sampled) == select_best(grid)

    def test_oversized_sample_rejected(self):
        space = SearchSpace(axes=(("a", (0, 1, 2)),))
        with pytest.raises(SearchError, match="exceeds"):
            random_search(space, 4, 0, lambda c: fake_report(0.0))
        with pytest.raises(ParameterError, match="positive"):
            random_search(space, 0, 0, lambda c: fake_report(0.0))

    def test_sampling_respects_constraints(self):
        space = SearchSpace(
            axes=(("a", (0, 1, 2, 3)), ("b", (0, 1, 2))),
            constraints=(lambda c: c["a"] != c["b"],),
        )
        for seed in range(25):
            result = random_search(space, 6, seed, lambda c: fake_report(0.0))
            for evaluation in result.evaluations:
                assert evaluation.combination["a"] != evaluation.combination["b"]

    def test_chisquare_uniform_over_valid_combinations(self):
        # Constrained space: 6 of the 12 raw cells survive. Every seed
        # draws one combination; counts over 10^4 seeds should be flat.
        space = SearchSpace(
            axes=(("a", (0, 1, 2, 3)), ("b", (0, 1, 2))),
            constraints=(lambda c: (c["a"] + c["b"]) % 2 == 0,),
        )
        valid = space.valid_indices()
        assert len(valid) == 6
        counts = {index: 0 for index in valid}
        for seed in range(10_000, 20_000):
            result = random_search(space, 1, seed, lambda c: fake_report(0.0))
            counts[result.evaluations[0].index] += 1
        check = stats.chisquare(list(counts.values()))
        assert check.pvalue > 0.01

    def test_chisquare_uniform_axis_marginals(self):
        space = SearchSpace(axes=(("x", (0, 1, 2, 3, 4)), ("y", (0, 1, 2, 3))))
        counts = np.zeros(5)
        for seed in range(2000):
            result = random_search(space, 3, seed, lambda c: fake_report(0.0))
            for evaluation in result.evaluations:
                counts[evaluation.combination["x"]] += 1
        check = stats.chisquare(counts)
        assert check.pvalue > 0.01


class TestSelection:
    def test_single_combination_selects_itself(self):
        space = SearchSpace(axes=(("a", (42,)),))
        result = grid_search(space, lambda c: fake_report(-1.0))
        assert select_best(result) == {"a": 42}

    def test_top_n(self):
        space = SearchSpace(axes=(("a", (0, 1, 2, 3, 4)),))
        result = grid_search(space, lambda c: fake_report(-c["a"]))
        assert top_n(result, 1) == [select_best(result)]
        assert top_n(result, 3) == [{"a": 0}, {"a": 1}, {"a": 2}]
        assert top_n(result, 99) == [{"a": k} for k in range(5)]
        assert top_n(result, 3) == top_n(result, 3)
        with pytest.raises(ParameterError, match="at least 1"):
            top_n(result, 0)

    def test_evaluation_records_are_frozen(self):
        evaluation = Evaluation(index=0, combination={"a": 1}, score=0.5)
        with pytest.raises(AttributeError):
            evaluation.score = 0.1
