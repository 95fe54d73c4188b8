"""Daily and monthly exogenous series, aligned without look-ahead.

Each candle row receives the most recent exogenous value dated strictly
before the row's calendar day (daily series) or calendar month (monthly
series), both in UTC. A row on 2022-08-17 04:05 therefore sees the daily
value of 2022-08-16 or earlier and the monthly value of 2022-07 or earlier.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from ..errors import CoverageError, DataError, ParseError

Frequency = Literal["daily", "monthly"]

_EPOCH_DAY = np.datetime64("1970-01-01", "D")
_EPOCH_MONTH = np.datetime64("1970-01", "M")


@dataclass(frozen=True)
class ExogenousSeries:
    """A named (date, value) series at daily or monthly native frequency.

    keys are days since epoch (daily) or months since epoch (monthly),
    strictly increasing.
    """

    name: str
    frequency: Frequency
    keys: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return self.keys.shape[0]


def _date_key(text: str, frequency: Frequency) -> int:
    text = text.strip()
    if frequency == "monthly" and len(text) == 7:
        stamp = np.datetime64(text, "M")
        return int((stamp - _EPOCH_MONTH).astype(np.int64))
    stamp = np.datetime64(text, "D")
    if frequency == "monthly":
        return int((stamp.astype("datetime64[M]") - _EPOCH_MONTH).astype(np.int64))
    return int((stamp - _EPOCH_DAY).astype(np.int64))


def load_exogenous(path: str | Path, name: str, frequency: Frequency) -> ExogenousSeries:
    """Load a (date, value) CSV; dates are ISO days or YYYY-MM for monthly."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"exogenous file not found: {path}")
    keys, values = [], []
    with path.open(newline="") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row:
                continue
            if lineno == 1 and not _looks_like_date(row[0]):
                continue  # header
            if len(row) < 2:
                raise ParseError(f"{path}:{lineno}: expected date,value")
            try:
                keys.append(_date_key(row[0], frequency))
                values.append(float(row[1]))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    if not keys:
        raise DataError(f"{path}: no rows")
    keys_arr = np.array(keys, dtype=np.int64)
    values_arr = np.array(values, dtype=np.float64)
    order = np.argsort(keys_arr, kind="stable")
    keys_arr, values_arr = keys_arr[order], values_arr[order]
    if np.any(np.diff(keys_arr) == 0):
        raise DataError(f"{path}: duplicate dates for {name}")
    return ExogenousSeries(name=name, frequency=frequency, keys=keys_arr, values=values_arr)


def _looks_like_date(text: str) -> bool:
    try:
        np.datetime64(text.strip())
        return True
    except ValueError:
        return False


def align_exogenous(open_time_ms: np.ndarray, exo: ExogenousSeries) -> np.ndarray:
    """Value of exo for each row, taken strictly before the row's day/month."""
    stamps = open_time_ms.astype("datetime64[ms]")
    if exo.frequency == "daily":
        row_keys = (stamps.astype("datetime64[D]") - _EPOCH_DAY).astype(np.int64)
    else:
        row_keys = (stamps.astype("datetime64[M]") - _EPOCH_MONTH).astype(np.int64)
    idx = np.searchsorted(exo.keys, row_keys, side="left") - 1
    if np.any(idx < 0):
        first = int(np.nonzero(idx < 0)[0][0])
        raise CoverageError(
            f"{exo.name}: no value strictly before row {first} "
            f"({np.datetime_as_string(stamps[first], unit='s')})"
        )
    return exo.values[idx]
