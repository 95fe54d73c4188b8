"""Deterministic report emission: metric tables, curve files, plot scripts.

Everything here is formatting over already-computed results; no metric is
recomputed, so table values cannot drift from the library's numbers. All
writers are reproducible byte for byte: no timestamps, sorted JSON keys,
"\n" newlines, and round-trip float text in CSV cells.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .backtest import BacktestReport, TTestResult
from .data.stats import StatsRecord
from .pipeline import WalkForwardResult

SUMMARY_HEADER = (
    "strategy",
    "VAL",
    "ARC",
    "ASD",
    "IR*",
    "MD",
    "IR**",
    "N",
    "LONG",
    "SHORT",
)

TTEST_HEADER = ("strategy", "N", "sigma", "t", "p_value", "significance")

STATS_HEADER = (
    "series",
    "count",
    "mean",
    "std",
    "min",
    "q25",
    "q50",
    "q75",
    "max",
    "skewness",
    "kurtosis",
    "KS",
    "KS_pvalue",
)


def format_cell(value: Any) -> str:
    """Canonical text for one table cell.

    None renders as "-" (an axis not in play), bools lowercase, floats as
    their shortest round-trip repr so reading the CSV back recovers the
    exact double.
    """
    if value is None:
        return "-"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _json_default(value: Any) -> Any:
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON-serializable: {type(value).__name__}")


def write_csv(path: Path | str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """Write a CSV with canonical cell formatting and "\n" line endings."""
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(cell) for cell in row])


def write_json(path: Path | str, payload: Any) -> None:
    """Write JSON with sorted keys and a trailing newline."""
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default)
    Path(path).write_text(text + "\n")


def write_text(path: Path | str, text: str) -> None:
    Path(path).write_text(text)


def summary_row(name: str, report: BacktestReport) -> Tuple[Any, ...]:
    """One metrics row; ARC/ASD/MD are scaled to percent for the table."""
    return (
        name,
        report.final_value,
        report.arc * 100.0,
        report.asd * 100.0,
        report.ir_star,
        report.md * 100.0,
        report.ir_double_star,
        report.n_trades,
        report.long_pct,
        report.short_pct,
    )


def summary_rows(
    reports: Mapping[str, BacktestReport], order: Optional[Sequence[str]] = None
) -> List[Tuple[Any, ...]]:
    names = list(order) if order is not None else list(reports)
    return [summary_row(name, reports[name]) for name in names]


def summary_row_from_payload(name: str, payload: Mapping[str, Any]) -> Tuple[Any, ...]:
    """summary_row over a report_payload dictionary read back from disk."""
    return (
        name,
        payload["final_value"],
        payload["arc"] * 100.0,
        payload["asd"] * 100.0,
        payload["ir_star"],
        payload["md"] * 100.0,
        payload["ir_double_star"],
        payload["n_trades"],
        payload["long_pct"],
        payload["short_pct"],
    )


def report_payload(report: BacktestReport) -> Dict[str, Any]:
    """Scalar metrics of one report as a JSON-ready dictionary."""
    return {
        "final_value": report.final_value,
        "arc": report.arc,
        "asd": report.asd,
        "ir_star": report.ir_star,
        "md": report.md,
        "ir_double_star": report.ir_double_star,
        "n_trades": report.n_trades,
        "long_pct": report.long_pct,
        "short_pct": report.short_pct,
        "intervals_per_year": report.intervals_per_year,
        "degenerate": list(report.degenerate),
    }


def ttest_row(name: str, result: TTestResult) -> Tuple[Any, ...]:
    return (name, result.n, result.sigma, result.t, result.p_value, result.significance)


def ttest_payload(result: TTestResult) -> Dict[str, Any]:
    return {
        "t": result.t,
        "p_value": result.p_value,
        "ir_diff": result.ir_diff,
        "sigma": result.sigma,
        "n": result.n,
        "significance": result.significance,
        "degenerate": result.degenerate,
    }


def stats_row(name: str, record: StatsRecord) -> Tuple[Any, ...]:
    return (
        name,
        record.count,
        record.mean,
        record.std,
        record.minimum,
        record.q25,
        record.q50,
        record.q75,
        record.maximum,
        record.skewness,
        record.kurtosis,
        record.ks_stat,
        record.ks_pvalue,
    )


def chosen_table(result: WalkForwardResult) -> Tuple[Tuple[str, ...], List[Tuple[Any, ...]]]:
    """Per-window chosen hyperparameters, one row per walk-forward window."""
    axes: Tuple[str, ...] = ()
    for evaluation in result.windows:
        if evaluation.combination:
            axes = tuple(evaluation.combination)
            break
    header = ("window",) + axes
    rows = [
        (evaluation.window_index,) + tuple(evaluation.combination.get(a) for a in axes)
        for evaluation in result.windows
    ]
    return header, rows


def curve_times(
    open_time: np.ndarray, close_time: np.ndarray, start: int, stop: int
) -> np.ndarray:
    """Timestamps for an equity curve over rows [start, stop).

    The curve has one more point than the row span: point 0 sits at the
    first row's open, point t at row t-1's close.
    """
    return np.concatenate(
        [open_time[start : start + 1], close_time[start:stop]]
    ).astype(np.int64)


def equity_rows(
    curve: np.ndarray, times: Optional[np.ndarray] = None
) -> Tuple[Tuple[str, ...], List[Tuple[Any, ...]]]:
    """Equity curve as CSV rows, optionally stamped with exchange times."""
    if times is not None:
        if len(times) != len(curve):
            raise ValueError(
                f"curve has {len(curve)} points but {len(times)} times given"
            )
        header = ("index", "time", "equity")
        rows = [(i, int(times[i]), float(curve[i])) for i in range(len(curve))]
        return header, rows
    header = ("index", "equity")
    return header, [(i, float(curve[i])) for i in range(len(curve))]


def plot_script(
    curve_files: Mapping[str, str],
    title: str = "equity curves",
    output: str = "equity.svg",
) -> str:
    """A gnuplot script drawing each named curve CSV on one chart.

    Curves are plotted from the "index" and "equity" columns; run with
    `gnuplot <script>` in the directory holding the CSVs.
    """
    lines = [
        "set datafile separator ','",
        "set key left top",
        f"set title '{title}'",
        "set xlabel 'interval'",
        "set ylabel 'portfolio value'",
        "set terminal svg size 900,540",
        f"set output '{output}'",
    ]
    plots = [
        f"'{filename}' using 1:(column('equity')) with lines title '{name}'"
        for name, filename in curve_files.items()
    ]
    lines.append("plot \\")
    lines.append(", \\\n".join(f"    {p}" for p in plots))
    return "\n".join(lines) + "\n"


def render_table(
    header: Sequence[str],
    rows: Sequence[Sequence[Any]],
    float_format: str = "%.3f",
) -> str:
    """Fixed-width text table; floats rounded for reading, not parsing."""

    def cell_text(value: Any) -> str:
        if isinstance(value, (float, np.floating)) and math.isfinite(value):
            return float_format % float(value)
        return format_cell(value)

    table = [[str(h) for h in header]] + [[cell_text(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    out = []
    for index, row in enumerate(table):
        padded = [
            row[0].ljust(widths[0]),
            *(row[i].rjust(widths[i]) for i in range(1, len(widths))),
        ]
        out.append("  ".join(padded).rstrip())
        if index == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out) + "\n"
