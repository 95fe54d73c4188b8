"""Command-line interface over the library.

Each subcommand loads the run configuration, rebuilds the feature frame
and window layout from the raw candle CSV (everything downstream is a
pure function of config plus data, so nothing is cached between
commands), and writes its artifacts under the output directory:

    resolved_config.json        exact settings of the last run, master seed included
    ingest/                     window manifest and gap report
    stats/                      descriptive statistics and distribution distances
    models/<strategy>/          checkpoints, training logs, model-search results
    search/<strategy>/          ranked combinations and the chosen one per window
    backtest/<strategy>/        per-window and combined reports, equity curves
    predict/<strategy>/         forecast CSVs over each test split
    ttest/                      significance tests against a benchmark
    sensitivity/                validation-length, window-count, and rank studies
    report/                     cross-strategy summary table and plot script

Commands are deterministic: rerunning one on unchanged inputs rewrites
byte-identical files. Exit codes: 0 success, 2 for input or config
problems the caller can fix, 1 for internal failures.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from .backtest import ir_t_test
from .config import RunConfig, load_config
from .data.exogenous import load_exogenous
from .data.features import FeatureFrame, build_features
from .data.klines import Gap, fill_gaps, load_klines
from .data.stats import descriptive_stats, wasserstein_1d
from .data.windows import DataWindow, make_windows
from .errors import (
    AlignmentError,
    CheckpointError,
    ConfigError,
    ParameterError,
    UserInputError,
)
from .informer.checkpoint import config_to_dict, load_checkpoint, save_checkpoint
from .informer.model import InformerModel, init_model
from .informer.training import TrainingLog, train
from .intervals import format_interval
from .pipeline import (
    FORECAST_STRATEGIES,
    LOSS_BY_STRATEGY,
    STRATEGIES,
    WalkForwardResult,
    WindowEvaluation,
    apply_model_combination,
    combine_evaluations,
    evaluate_window,
    model_search,
    span_forecasts,
    top_n_walk_forward,
    window_seeds,
)
from .reporting import (
    STATS_HEADER,
    SUMMARY_HEADER,
    TTEST_HEADER,
    chosen_table,
    curve_times,
    equity_rows,
    format_cell,
    plot_script,
    render_table,
    report_payload,
    stats_row,
    summary_row,
    summary_row_from_payload,
    ttest_payload,
    ttest_row,
    write_csv,
    write_json,
    write_text,
)

SEARCHABLE = tuple(s for s in STRATEGIES if s != "buy_and_hold")

T = TypeVar("T")
U = TypeVar("U")


# ---------------------------------------------------------------- plumbing


def _window_tag(index: int) -> str:
    return f"window_{index:02d}"


def _context(args: argparse.Namespace) -> Tuple[RunConfig, Path, int]:
    """Load the config, fix the output directory and master seed, and
    write the resolved snapshot every command leaves beside its outputs."""
    config = load_config(args.config)
    out = Path(args.out) if args.out is not None else Path(config.output_dir)
    seed = config.seed if args.seed is None else args.seed
    jobs = getattr(args, "jobs", 1)
    if jobs < 1:
        raise ParameterError(f"--jobs must be at least 1, got {jobs}")
    out.mkdir(parents=True, exist_ok=True)
    resolved = config.resolved()
    resolved["seed"] = seed
    write_json(out / "resolved_config.json", resolved)
    return config, out, seed


def _load_frame(config: RunConfig) -> Tuple[FeatureFrame, List[Gap]]:
    if config.klines_csv is None:
        raise ConfigError("config sets no data.klines_csv; point it at a candle CSV")
    series = load_klines(config.klines_csv, config.interval_ms)
    dense, gaps = fill_gaps(series)
    exogenous = [
        load_exogenous(entry["path"], entry["name"], entry["frequency"])
        for entry in config.exogenous
    ]
    return build_features(dense, exogenous), gaps


def _make_windows(config: RunConfig, frame: FeatureFrame) -> List[DataWindow]:
    layout = config.windows
    return make_windows(
        frame,
        layout.count,
        layout.in_sample_months,
        layout.out_sample_months,
        layout.validation_fraction,
    )


def _select_windows(
    windows: List[DataWindow], selector: Optional[int]
) -> List[DataWindow]:
    if selector is None:
        return windows
    if not 1 <= selector <= len(windows):
        raise ParameterError(
            f"--window {selector} out of range; layout has windows 1..{len(windows)}"
        )
    return [windows[selector - 1]]


def _map_ordered(fn: Callable[[T], U], items: Sequence[T], jobs: int) -> List[U]:
    """Apply fn across items, optionally in parallel, keeping input order."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))


def _read_json(path: Path) -> Any:
    return json.loads(path.read_text())


def _load_models(
    out: Path, strategy: str, windows: Sequence[DataWindow], frame: FeatureFrame
) -> Optional[List[InformerModel]]:
    """Checkpointed models for each window, or None for non-forecast strategies."""
    if strategy not in FORECAST_STRATEGIES:
        return None
    models = []
    for window in windows:
        path = out / "models" / strategy / f"{_window_tag(window.index)}.ckpt"
        if not path.exists():
            raise CheckpointError(
                f"missing checkpoint {path}; run "
                f"`wflab train --strategy {strategy}` first"
            )
        model, _ = load_checkpoint(path)
        if model.config.num_real != frame.num_real:
            raise CheckpointError(
                f"{path}: model expects {model.config.num_real} features, "
                f"data has {frame.num_real}"
            )
        expected = LOSS_BY_STRATEGY[strategy]
        if model.config.loss_kind != expected:
            raise CheckpointError(
                f"{path}: checkpoint trained with {model.config.loss_kind!r} "
                f"loss, strategy needs {expected!r}"
            )
        models.append(model)
    return models


def _read_chosen(
    out: Path, strategy: str, windows: Sequence[DataWindow]
) -> List[Dict[str, Any]]:
    """Per-window combinations chosen by a previous `wflab search` run."""
    path = out / "search" / strategy / "chosen.json"
    if not path.exists():
        raise ConfigError(
            f"no chosen hyperparameters at {path}; run "
            f"`wflab search --strategy {strategy}` first"
        )
    payload = _read_json(path)
    by_window = {entry["window"]: entry["combination"] for entry in payload["windows"]}
    combos = []
    for window in windows:
        if window.index not in by_window:
            raise ConfigError(
                f"{path} has no combination for window {window.index}; "
                f"rerun `wflab search --strategy {strategy}`"
            )
        combos.append(by_window[window.index])
    return combos


def _searched_evaluations(
    strategy: str,
    config: RunConfig,
    frame: FeatureFrame,
    windows: Sequence[DataWindow],
    models: Optional[Sequence[InformerModel]],
    seed: int,
    jobs: int,
) -> List[WindowEvaluation]:
    """Grid-search each window's validation split and score its test split.

    Forecast strategies use the supplied checkpointed models, or train in
    memory from the base model config when none are given.
    """
    space = config.strategy_space(strategy)
    model_config = None
    if strategy in FORECAST_STRATEGIES and models is None:
        model_config = config.base_model_config(
            LOSS_BY_STRATEGY[strategy], frame.num_real
        )
    seeds = window_seeds(seed, len(windows))

    def one(item: Tuple[int, DataWindow]) -> WindowEvaluation:
        position, window = item
        return evaluate_window(
            strategy,
            frame,
            window,
            config.fee,
            space=space,
            model_config=model_config,
            pretrained=models[position] if models is not None else None,
            seed=seeds[position],
        )

    return _map_ordered(one, list(enumerate(windows)), jobs)


def _training_log_payload(log: TrainingLog) -> Dict[str, Any]:
    return {
        "loss_kind": log.loss_kind,
        "seed": log.seed,
        "best_val_loss": log.best_val_loss,
        "best_batch": log.best_batch,
        "epochs_run": log.epochs_run,
        "batches_run": log.batches_run,
        "stopped_early": log.stopped_early,
        "points": [
            {
                "epoch": p.epoch,
                "batch": p.batch,
                "train_loss": p.train_loss,
                "val_loss": p.val_loss,
                "improved": p.improved,
            }
            for p in log.points
        ],
    }


def _combined_span(result: WalkForwardResult) -> Tuple[int, int]:
    segments = sorted(result.windows, key=lambda e: e.segment.start)
    first = segments[0].segment
    last = segments[-1].segment
    return first.start, last.start + last.returns.size


def _write_backtest_artifacts(
    out: Path, frame: FeatureFrame, result: WalkForwardResult
) -> Path:
    directory = out / "backtest" / result.strategy
    directory.mkdir(parents=True, exist_ok=True)
    for evaluation in result.windows:
        write_json(
            directory / f"{_window_tag(evaluation.window_index)}.json",
            {
                "window": evaluation.window_index,
                "combination": evaluation.combination,
                "validation": report_payload(evaluation.validation),
                "test": report_payload(evaluation.test),
            },
        )
    write_json(
        directory / "combined.json",
        {
            "strategy": result.strategy,
            "windows": [e.window_index for e in result.windows],
            "strategy_report": report_payload(result.combined),
            "benchmark_report": report_payload(result.benchmark),
        },
    )
    write_csv(
        directory / "summary.csv",
        SUMMARY_HEADER,
        [
            summary_row(result.strategy, result.combined),
            summary_row("buy_and_hold", result.benchmark),
        ],
    )
    start, stop = _combined_span(result)
    times = curve_times(frame.open_time, frame.close_time, start, stop)
    header, rows = equity_rows(result.combined.equity_curve, times)
    write_csv(directory / "equity.csv", header, rows)
    header, rows = equity_rows(result.benchmark.equity_curve, times)
    write_csv(directory / "benchmark_equity.csv", header, rows)
    header, rows = chosen_table(result)
    write_csv(directory / "chosen.csv", header, rows)
    return directory


def _print_summary(result: WalkForwardResult) -> None:
    rows = [
        summary_row(result.strategy, result.combined),
        summary_row("buy_and_hold", result.benchmark),
    ]
    print(render_table(SUMMARY_HEADER, rows), end="")


# ---------------------------------------------------------------- commands


def cmd_ingest(args: argparse.Namespace) -> None:
    config, out, seed = _context(args)
    frame, gaps = _load_frame(config)
    windows = _make_windows(config, frame)
    directory = out / "ingest"
    directory.mkdir(parents=True, exist_ok=True)
    write_json(
        directory / "gaps.json",
        {
            "gap_runs": len(gaps),
            "missing_candles": sum(gap.missing for gap in gaps),
            "gaps": [
                {"start_open_time": gap.start_open_time, "missing": gap.missing}
                for gap in gaps
            ],
        },
    )
    write_json(
        directory / "windows.json",
        {
            "interval": format_interval(frame.interval_ms),
            "rows": len(frame),
            "warmup_rows": frame.warmup,
            "feature_names": list(frame.real_names),
            "windows": [
                {
                    "index": w.index,
                    "train": [w.train.start, w.train.stop],
                    "validation": [w.validation.start, w.validation.stop],
                    "test": [w.test.start, w.test.stop],
                    "train_rows": w.train.stop - w.train.start,
                    "validation_rows": w.validation.stop - w.validation.start,
                    "test_rows": w.test.stop - w.test.start,
                    "test_open_time": int(frame.open_time[w.test.start]),
                    "test_close_time": int(frame.close_time[w.test.stop - 1]),
                }
                for w in windows
            ],
        },
    )
    _write_stats_artifacts(out, frame, windows)
    missing = sum(gap.missing for gap in gaps)
    print(
        f"ingested {len(frame)} rows at {format_interval(frame.interval_ms)} "
        f"({missing} filled across {len(gaps)} gaps), {len(windows)} windows"
    )


def _write_stats_artifacts(
    out: Path, frame: FeatureFrame, windows: Sequence[DataWindow]
) -> List[Tuple[Any, ...]]:
    directory = out / "stats"
    directory.mkdir(parents=True, exist_ok=True)
    returns = frame.returns
    rows = [stats_row("full", descriptive_stats(returns))]
    for w in windows:
        for split in ("train", "validation", "test"):
            span = getattr(w, split)
            rows.append(
                stats_row(
                    f"w{w.index}_{split}",
                    descriptive_stats(returns[span.start : span.stop]),
                )
            )
    write_csv(directory / "stats.csv", STATS_HEADER, rows)
    distance_rows = []
    for w in windows:
        train = returns[w.train.start : w.train.stop]
        validation = returns[w.validation.start : w.validation.stop]
        test = returns[w.test.start : w.test.stop]
        distance_rows.append(
            (
                f"w{w.index}",
                wasserstein_1d(train, validation),
                wasserstein_1d(train, test),
                wasserstein_1d(validation, test),
            )
        )
    write_csv(
        directory / "wasserstein.csv",
        ("window", "train_vs_validation", "train_vs_test", "validation_vs_test"),
        distance_rows,
    )
    return rows


def cmd_stats(args: argparse.Namespace) -> None:
    config, out, _ = _context(args)
    frame, _ = _load_frame(config)
    windows = _make_windows(config, frame)
    rows = _write_stats_artifacts(out, frame, windows)
    print(render_table(STATS_HEADER, rows, float_format="%.6g"), end="")


def cmd_backtest(args: argparse.Namespace) -> None:
    config, out, seed = _context(args)
    frame, _ = _load_frame(config)
    windows = _select_windows(_make_windows(config, frame), args.window)
    strategy = args.strategy
    if strategy == "buy_and_hold":
        combos: List[Dict[str, Any]] = [{} for _ in windows]
    else:
        combos = _read_chosen(out, strategy, windows)
    models = _load_models(out, strategy, windows, frame)

    def one(item: Tuple[int, DataWindow]) -> WindowEvaluation:
        position, window = item
        params = combos[position]
        return evaluate_window(
            strategy,
            frame,
            window,
            config.fee,
            params=None if strategy == "buy_and_hold" else params,
            pretrained=models[position] if models is not None else None,
        )

    evaluations = _map_ordered(one, list(enumerate(windows)), args.jobs)
    result = combine_evaluations(strategy, frame, evaluations, config.fee)
    _write_backtest_artifacts(out, frame, result)
    _print_summary(result)


def cmd_search(args: argparse.Namespace) -> None:
    config, out, seed = _context(args)
    frame, _ = _load_frame(config)
    windows = _select_windows(_make_windows(config, frame), args.window)
    strategy = args.strategy
    models = _load_models(out, strategy, windows, frame)
    evaluations = _searched_evaluations(
        strategy, config, frame, windows, models, seed, args.jobs
    )
    directory = out / "search" / strategy
    directory.mkdir(parents=True, exist_ok=True)
    axes = config.strategy_space(strategy).names
    chosen_entries = []
    for evaluation in evaluations:
        search = evaluation.search
        ranked_rows = [
            (rank, e.index)
            + tuple(e.combination[a] for a in axes)
            + (e.report.ir_double_star, e.report.n_trades)
            for rank, e in enumerate(search.evaluations, start=1)
        ]
        write_csv(
            directory / f"{_window_tag(evaluation.window_index)}_ranked.csv",
            ("rank", "index") + axes + ("ir_double_star", "n_trades"),
            ranked_rows,
        )
        if search.failures:
            write_csv(
                directory / f"{_window_tag(evaluation.window_index)}_failures.csv",
                ("index", "error"),
                [(e.index, e.error) for e in search.failures],
            )
        chosen_entries.append(
            {
                "window": evaluation.window_index,
                "combination": evaluation.combination,
                "validation_ir_double_star": evaluation.validation.ir_double_star,
                "evaluated": len(search.evaluations),
                "failed": len(search.failures),
            }
        )
    write_json(
        directory / "chosen.json",
        {"strategy": strategy, "metric": "ir_double_star", "windows": chosen_entries},
    )
    result = combine_evaluations(strategy, frame, evaluations, config.fee)
    header, rows = chosen_table(result)
    print(render_table(header, rows, float_format="%.6g"), end="")


def cmd_train(args: argparse.Namespace) -> None:
    config, out, seed = _context(args)
    frame, _ = _load_frame(config)
    all_windows = _make_windows(config, frame)
    strategy = args.strategy
    loss_kind = LOSS_BY_STRATEGY[strategy]
    base = config.base_model_config(loss_kind, frame.num_real)
    directory = out / "models" / strategy
    directory.mkdir(parents=True, exist_ok=True)
    if args.model_search:
        search = model_search(
            base,
            config.model_space(),
            frame,
            all_windows[0],
            config.model_sample_size,
            seed,
        )
        best = search.evaluations[0]
        write_json(
            directory / "model_search.json",
            {
                "seed": seed,
                "sample_size": config.model_sample_size,
                "metric": "validation_loss",
                "chosen": best.combination,
                "chosen_val_loss": best.score,
                "ranked": [
                    {"index": e.index, "combination": e.combination, "val_loss": e.score}
                    for e in search.evaluations
                ],
                "failures": [
                    {"index": e.index, "error": e.error} for e in search.failures
                ],
            },
        )
        base = apply_model_combination(base, best.combination)
    write_json(directory / "config.json", config_to_dict(base))
    seeds = window_seeds(seed, len(all_windows))
    windows = _select_windows(all_windows, args.window)

    def train_one(window: DataWindow) -> Tuple[DataWindow, InformerModel, TrainingLog]:
        window_seed = seeds[window.index - 1]
        model = init_model(base, window_seed)
        model, log = train(model, frame, window, window_seed)
        return window, model, log

    for window, model, log in _map_ordered(train_one, windows, args.jobs):
        window_seed = seeds[window.index - 1]
        save_checkpoint(
            directory / f"{_window_tag(window.index)}.ckpt",
            model,
            seed=window_seed,
            extra={"strategy": strategy, "window": window.index, "loss_kind": loss_kind},
        )
        write_json(
            directory / f"{_window_tag(window.index)}_training.json",
            _training_log_payload(log),
        )
        print(
            f"window {window.index}: best validation loss "
            f"{log.best_val_loss:.6g} after {log.batches_run} batches"
            f"{' (stopped early)' if log.stopped_early else ''}"
        )


def cmd_predict(args: argparse.Namespace) -> None:
    config, out, _ = _context(args)
    frame, _ = _load_frame(config)
    windows = _select_windows(_make_windows(config, frame), args.window)
    strategy = args.strategy
    models = _load_models(out, strategy, windows, frame)
    directory = out / "predict" / strategy
    directory.mkdir(parents=True, exist_ok=True)
    for window, model in zip(windows, models):
        span = window.test
        forecasts = span_forecasts(model, frame, window.normalization, span)
        indices = np.arange(span.start, span.stop)
        columns: List[Tuple[str, np.ndarray]] = [
            ("open_time", frame.open_time[span.slice]),
            ("close_time", frame.close_time[span.slice]),
            ("actual_return", frame.returns[span.slice]),
        ]
        if isinstance(forecasts, dict):
            for level in sorted(forecasts):
                columns.append((f"forecast_q{format_cell(level)}", forecasts[level]))
        else:
            columns.append(("forecast", forecasts))
        header = ("index",) + tuple(name for name, _ in columns)
        rows = [
            (int(indices[i]),) + tuple(values[i] for _, values in columns)
            for i in range(indices.size)
        ]
        write_csv(directory / f"{_window_tag(window.index)}.csv", header, rows)
        print(f"window {window.index}: {indices.size} forecasts")


def _read_equity(path: Path) -> Tuple[np.ndarray, np.ndarray]:
    if not path.exists():
        raise ConfigError(
            f"no equity curve at {path}; run `wflab backtest` for that strategy first"
        )
    times, equity = [], []
    with path.open() as handle:
        lines = handle.read().splitlines()
    for line in lines[1:]:
        _, time_text, equity_text = line.split(",")
        times.append(int(time_text))
        equity.append(float(equity_text))
    return np.asarray(equity, dtype=np.float64), np.asarray(times, dtype=np.int64)


def cmd_ttest(args: argparse.Namespace) -> None:
    config, out, _ = _context(args)
    strategy, benchmark = args.strategy, args.benchmark
    if strategy == benchmark:
        raise ParameterError("strategy and benchmark must differ")
    strategy_dir = out / "backtest" / strategy
    curve_s, times_s = _read_equity(strategy_dir / "equity.csv")
    info_s = _read_json(strategy_dir / "combined.json")
    benchmark_dir = out / "backtest" / benchmark
    if benchmark == "buy_and_hold" and not benchmark_dir.exists():
        # every backtest carries its own aligned buy-and-hold curve
        curve_b, times_b = _read_equity(strategy_dir / "benchmark_equity.csv")
        ir_b = info_s["benchmark_report"]["ir_star"]
    else:
        curve_b, times_b = _read_equity(benchmark_dir / "equity.csv")
        ir_b = _read_json(benchmark_dir / "combined.json")["strategy_report"]["ir_star"]
    if times_s.shape != times_b.shape or np.any(times_s != times_b):
        raise AlignmentError(
            f"{strategy} and {benchmark} backtests cover different periods; "
            f"rerun both over the same windows"
        )
    net_s = curve_s[1:] / curve_s[:-1] - 1.0
    net_b = curve_b[1:] / curve_b[:-1] - 1.0
    result = ir_t_test(net_s, net_b, info_s["strategy_report"]["ir_star"], ir_b)
    directory = out / "ttest"
    directory.mkdir(parents=True, exist_ok=True)
    stem = f"{strategy}_vs_{benchmark}"
    payload = ttest_payload(result)
    payload["strategy"] = strategy
    payload["benchmark"] = benchmark
    write_json(directory / f"{stem}.json", payload)
    write_csv(directory / f"{stem}.csv", TTEST_HEADER, [ttest_row(strategy, result)])
    print(render_table(TTEST_HEADER, [ttest_row(strategy, result)]), end="")


def cmd_sensitivity(args: argparse.Namespace) -> None:
    config, out, seed = _context(args)
    frame, _ = _load_frame(config)
    strategy = args.strategy
    settings = config.raw["sensitivity"]
    layout = config.windows
    header = ("setting", "series") + SUMMARY_HEADER[1:]
    rows: List[Tuple[Any, ...]] = []

    def run_layout(windows: Sequence[DataWindow]) -> WalkForwardResult:
        models = _load_models(out, strategy, windows, frame) if args.checkpoints else None
        evaluations = _searched_evaluations(
            strategy, config, frame, windows, models, seed, args.jobs
        )
        return combine_evaluations(strategy, frame, evaluations, config.fee)

    if args.study == "val_length":
        for months in settings["validation_months"]:
            if months >= layout.in_sample_months:
                raise ConfigError(
                    f"sensitivity.validation_months value {months} does not fit "
                    f"the {layout.in_sample_months}-month in-sample span"
                )
            fraction = months / layout.in_sample_months
            windows = make_windows(
                frame,
                layout.count,
                layout.in_sample_months,
                layout.out_sample_months,
                fraction,
            )
            result = run_layout(windows)
            label = f"{months} months"
            rows.append((label, strategy) + summary_row("", result.combined)[1:])
            rows.append((label, "buy_and_hold") + summary_row("", result.benchmark)[1:])
    elif args.study == "window_count":
        for count in settings["window_counts"]:
            windows = make_windows(
                frame,
                count,
                layout.in_sample_months,
                layout.out_sample_months,
                layout.validation_fraction,
            )
            result = run_layout(windows)
            label = f"{count} windows"
            rows.append((label, strategy) + summary_row("", result.combined)[1:])
            rows.append((label, "buy_and_hold") + summary_row("", result.benchmark)[1:])
    else:  # top_n
        windows = _make_windows(config, frame)
        result = run_layout(windows)
        for rank, report in top_n_walk_forward(result, frame, config.fee, settings["top_n"]):
            rows.append((f"rank {rank}", strategy) + summary_row("", report)[1:])
        rows.append(("base", "buy_and_hold") + summary_row("", result.benchmark)[1:])
    directory = out / "sensitivity"
    directory.mkdir(parents=True, exist_ok=True)
    write_csv(directory / f"{args.study}_{strategy}.csv", header, rows)
    print(render_table(header, rows), end="")


def cmd_report(args: argparse.Namespace) -> None:
    config, out, _ = _context(args)
    backtest_root = out / "backtest"
    strategies = sorted(
        path.name
        for path in (backtest_root.iterdir() if backtest_root.is_dir() else [])
        if (path / "combined.json").exists()
    )
    if not strategies:
        raise ConfigError(
            f"no backtest artifacts under {backtest_root}; run `wflab backtest` first"
        )
    rows = []
    curves: Dict[str, str] = {}
    benchmark_payload = None
    for strategy in strategies:
        payload = _read_json(backtest_root / strategy / "combined.json")
        rows.append(summary_row_from_payload(strategy, payload["strategy_report"]))
        curves[strategy] = f"../backtest/{strategy}/equity.csv"
        if benchmark_payload is None:
            benchmark_payload = payload["benchmark_report"]
            benchmark_curve = f"../backtest/{strategy}/benchmark_equity.csv"
    if "buy_and_hold" not in strategies:
        rows.append(summary_row_from_payload("buy_and_hold", benchmark_payload))
        curves["buy_and_hold"] = benchmark_curve
    directory = out / "report"
    directory.mkdir(parents=True, exist_ok=True)
    write_csv(directory / "summary.csv", SUMMARY_HEADER, rows)
    table = render_table(SUMMARY_HEADER, rows)
    write_text(directory / "summary.txt", table)
    write_text(
        directory / "plots.gp",
        plot_script(curves, title="combined test period", output="equity.svg"),
    )
    print(table, end="")


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wflab",
        description="Walk-forward backtesting laboratory over candle data.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add(
        name: str,
        func: Callable[[argparse.Namespace], None],
        help_text: str,
        strategies: Optional[Tuple[str, ...]] = None,
        window: bool = False,
        jobs: bool = False,
    ) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(name, help=help_text, description=help_text)
        sub.add_argument("--config", required=True, help="run configuration JSON file")
        sub.add_argument(
            "--out", default=None, help="output directory (default: config output_dir)"
        )
        sub.add_argument("--seed", type=int, default=None, help="master seed override")
        if strategies is not None:
            sub.add_argument("--strategy", required=True, choices=strategies)
        if window:
            sub.add_argument(
                "--window", type=int, default=None, help="1-based window selector"
            )
        if jobs:
            sub.add_argument(
                "--jobs", type=int, default=1, help="parallel window evaluations"
            )
        sub.set_defaults(func=func)
        return sub

    add("ingest", cmd_ingest, "build features, windows, gap report, and stats tables")
    add("stats", cmd_stats, "write and print descriptive statistics tables")
    add(
        "backtest",
        cmd_backtest,
        "score chosen hyperparameters on the test splits",
        strategies=STRATEGIES,
        window=True,
        jobs=True,
    )
    add(
        "search",
        cmd_search,
        "grid-search hyperparameters on each validation split",
        strategies=SEARCHABLE,
        window=True,
        jobs=True,
    )
    train_parser = add(
        "train",
        cmd_train,
        "train one forecaster per window (optionally model-search first)",
        strategies=FORECAST_STRATEGIES,
        window=True,
        jobs=True,
    )
    train_parser.add_argument(
        "--model-search",
        action="store_true",
        help="random-search the model configuration on window 1 first",
    )
    add(
        "predict",
        cmd_predict,
        "write test-split forecasts for trained models",
        strategies=FORECAST_STRATEGIES,
        window=True,
    )
    sensitivity_parser = add(
        "sensitivity",
        cmd_sensitivity,
        "re-run selection under varied validation length, window count, or rank",
        strategies=SEARCHABLE,
        jobs=True,
    )
    sensitivity_parser.add_argument(
        "--study", required=True, choices=("val_length", "window_count", "top_n")
    )
    sensitivity_parser.add_argument(
        "--checkpoints",
        action="store_true",
        help="reuse trained checkpoints instead of training in memory",
    )
    ttest_parser = add(
        "ttest",
        cmd_ttest,
        "one-sided IR* significance test against a benchmark",
        strategies=STRATEGIES,
    )
    ttest_parser.add_argument(
        "--benchmark", default="buy_and_hold", choices=STRATEGIES
    )
    add("report", cmd_report, "aggregate backtest artifacts into one summary")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except UserInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - internal failures
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
