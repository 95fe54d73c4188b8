"""Exchange k-line (candle) ingestion and gap repair.

CSV rows follow the exchange export layout: open_time, open, high, low,
close, volume, close_time, then optional extra columns which are ignored.
Timestamps are epoch milliseconds UTC. Missing intervals are filled with
synthetic flat candles that copy the previous close and volume.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

import numpy as np

from ..errors import DataError, DomainError, ParseError

_MIN_COLUMNS = 7


@dataclass(frozen=True)
class Candle:
    open_time: int
    open: float
    high: float
    low: float
    close: float
    volume: float
    close_time: int
    synthetic: bool = False


@dataclass
class CandleSeries:
    """Column-oriented, time-ordered candle storage on a fixed interval grid."""

    interval_ms: int
    open_time: np.ndarray
    close_time: np.ndarray
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    volume: np.ndarray
    synthetic: np.ndarray

    def __len__(self) -> int:
        return self.open_time.shape[0]

    def candle(self, i: int) -> Candle:
        return Candle(
            int(self.open_time[i]),
            float(self.open[i]),
            float(self.high[i]),
            float(self.low[i]),
            float(self.close[i]),
            float(self.volume[i]),
            int(self.close_time[i]),
            bool(self.synthetic[i]),
        )


@dataclass(frozen=True)
class Gap:
    """A run of missing candles: open_time of the first missing interval and count."""

    start_open_time: int
    missing: int


def _validate_candles(series: CandleSeries) -> None:
    ot, ct = series.open_time, series.close_time
    bad = np.nonzero(ct <= ot)[0]
    if bad.size:
        raise DataError(f"candle {bad[0]}: close_time {ct[bad[0]]} <= open_time {ot[bad[0]]}")
    prices = np.stack([series.open, series.close])
    bad = np.nonzero(series.low > prices.min(axis=0))[0]
    if bad.size:
        raise DataError(f"candle {bad[0]}: low above open/close")
    bad = np.nonzero(series.high < prices.max(axis=0))[0]
    if bad.size:
        raise DataError(f"candle {bad[0]}: high below open/close")
    bad = np.nonzero(series.volume < 0)[0]
    if bad.size:
        raise DataError(f"candle {bad[0]}: negative volume")


def load_klines(path: str | Path, interval_ms: int) -> CandleSeries:
    """Load a k-line CSV, sort by open_time, and validate candle invariants.

    Raises ParseError naming the 1-based line number on malformed rows and
    DataError on duplicate timestamps or impossible candles.
    """
    path = Path(path)
    if not path.exists():
        raise ParseError(f"k-line file not found: {path}")
    rows: List[Tuple[int, float, float, float, float, float, int]] = []
    with path.open(newline="") as f:
        reader = csv.reader(f)
        for lineno, row in enumerate(reader, start=1):
            if not row or (lineno == 1 and row and not _is_number(row[0])):
                continue  # blank line or header
            if len(row) < _MIN_COLUMNS:
                raise ParseError(f"{path}:{lineno}: expected >= {_MIN_COLUMNS} columns, got {len(row)}")
            try:
                rows.append(
                    (
                        int(row[0]),
                        float(row[1]),
                        float(row[2]),
                        float(row[3]),
                        float(row[4]),
                        float(row[5]),
                        int(row[6]),
                    )
                )
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no candle rows")
    arr = np.array(rows, dtype=np.float64)
    order = np.argsort(arr[:, 0], kind="stable")
    arr = arr[order]
    open_time = arr[:, 0].astype(np.int64)
    if np.any(np.diff(open_time) == 0):
        dup = int(open_time[np.nonzero(np.diff(open_time) == 0)[0][0]])
        raise DataError(f"{path}: duplicate open_time {dup}")
    series = CandleSeries(
        interval_ms=interval_ms,
        open_time=open_time,
        close_time=arr[:, 6].astype(np.int64),
        open=arr[:, 1].copy(),
        high=arr[:, 2].copy(),
        low=arr[:, 3].copy(),
        close=arr[:, 4].copy(),
        volume=arr[:, 5].copy(),
        synthetic=np.zeros(len(open_time), dtype=bool),
    )
    _validate_candles(series)
    return series


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def write_klines_csv(series: CandleSeries, path: str | Path) -> None:
    """Write a candle series in the exchange export layout load_klines reads.

    Floats use repr, so a load of the written file reproduces the arrays
    bit for bit.
    """
    path = Path(path)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(
            ["open_time", "open", "high", "low", "close", "volume", "close_time"]
        )
        for i in range(len(series)):
            writer.writerow(
                [
                    int(series.open_time[i]),
                    repr(float(series.open[i])),
                    repr(float(series.high[i])),
                    repr(float(series.low[i])),
                    repr(float(series.close[i])),
                    repr(float(series.volume[i])),
                    int(series.close_time[i]),
                ]
            )


def fill_gaps(series: CandleSeries) -> Tuple[CandleSeries, List[Gap]]:
    """Fill missing grid intervals with flat synthetic candles.

    Synthetic candles copy the previous close into open/high/low/close and
    the previous volume verbatim. Returns the dense series plus a gap report.
    """
    step = series.interval_ms
    diffs = np.diff(series.open_time)
    off_grid = np.nonzero(diffs % step != 0)[0]
    if off_grid.size:
        i = int(off_grid[0])
        raise DataError(
            f"candles {i} and {i + 1} are {diffs[i]} ms apart, not a multiple of {step} ms"
        )
    counts = np.concatenate([(diffs // step).astype(np.int64), [1]])  # copies per source candle
    gaps = [
        Gap(int(series.open_time[i] + step), int(counts[i] - 1))
        for i in np.nonzero(counts > 1)[0]
    ]
    if not gaps:
        return series, []
    src = np.repeat(np.arange(len(series)), counts)
    offset = np.arange(src.size) - np.repeat(np.cumsum(counts) - counts, counts)
    synthetic = offset > 0
    open_time = series.open_time[src] + offset * step
    close = series.close[src]
    out = CandleSeries(
        interval_ms=step,
        open_time=open_time,
        close_time=np.where(synthetic, open_time + step - 1, series.close_time[src]),
        open=np.where(synthetic, close, series.open[src]),
        high=np.where(synthetic, close, series.high[src]),
        low=np.where(synthetic, close, series.low[src]),
        close=close.copy(),
        volume=series.volume[src].copy(),
        synthetic=synthetic,
    )
    return out, gaps


def compute_returns(series: CandleSeries) -> np.ndarray:
    """Per-interval simple returns (close - open) / open."""
    if np.any(series.open == 0):
        i = int(np.nonzero(series.open == 0)[0][0])
        raise DomainError(f"candle {i}: zero open price, returns undefined")
    return (series.close - series.open) / series.open
