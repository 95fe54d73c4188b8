"""Candle interval arithmetic.

Intervals are held as integer milliseconds. Annualization uses a 365-day
year and window spans use 30-day months so every window has the same row
count regardless of calendar irregularities.
"""
from __future__ import annotations

import re

from .errors import ConfigError

MS_PER_SECOND = 1000
MS_PER_MINUTE = 60 * MS_PER_SECOND
MS_PER_HOUR = 60 * MS_PER_MINUTE
MS_PER_DAY = 24 * MS_PER_HOUR

_UNIT_MS = {"ms": 1, "s": MS_PER_SECOND, "min": MS_PER_MINUTE, "h": MS_PER_HOUR, "d": MS_PER_DAY}

_INTERVAL_RE = re.compile(r"^(\d+)(ms|s|min|h|d)$")


def parse_interval(text: str) -> int:
    """Parse an interval label like "5min" or "1h" into milliseconds."""
    m = _INTERVAL_RE.match(text.strip())
    if not m:
        raise ConfigError(f"unrecognized interval {text!r}; expected forms like 5min, 15min, 1h")
    ms = int(m.group(1)) * _UNIT_MS[m.group(2)]
    if ms <= 0:
        raise ConfigError(f"interval {text!r} must be positive")
    return ms


def format_interval(interval_ms: int) -> str:
    for unit, unit_ms in (("d", MS_PER_DAY), ("h", MS_PER_HOUR), ("min", MS_PER_MINUTE), ("s", MS_PER_SECOND)):
        if interval_ms % unit_ms == 0:
            return f"{interval_ms // unit_ms}{unit}"
    return f"{interval_ms}ms"


def intervals_per_year(interval_ms: int) -> float:
    """Scaling constant for annualized metrics: intervals in a 365-day year."""
    return 365 * MS_PER_DAY / interval_ms


def intervals_per(span_ms: int, interval_ms: int) -> int:
    """Exact number of intervals in a span; the span must divide evenly."""
    if span_ms % interval_ms != 0:
        raise ConfigError(
            f"span of {span_ms} ms is not a whole number of {interval_ms} ms intervals"
        )
    return span_ms // interval_ms


def month_rows(months: float, interval_ms: int) -> int:
    """Rows in a span of 30-day months; must come out integral."""
    span_ms = months * 30 * MS_PER_DAY
    rows = span_ms / interval_ms
    if abs(rows - round(rows)) > 1e-9:
        raise ConfigError(f"{months} months is not a whole number of {interval_ms} ms intervals")
    return int(round(rows))
