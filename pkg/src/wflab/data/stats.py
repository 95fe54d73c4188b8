"""Descriptive statistics and distribution tests for return series."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import ndtr

from ..errors import DomainError, InsufficientDataError


@dataclass(frozen=True)
class StatsRecord:
    """Summary of a return distribution; degenerate marks a constant series."""

    count: int
    mean: float
    std: float
    minimum: float
    q25: float
    q50: float
    q75: float
    maximum: float
    skewness: float
    kurtosis: float  # excess
    ks_stat: float
    ks_pvalue: float
    degenerate: bool = False


def descriptive_stats(returns: np.ndarray) -> StatsRecord:
    """Moments, quartiles (linear interpolation), and normality test.

    std is the sample standard deviation (n-1); kurtosis is excess; a
    constant series yields std 0 with NaN shape/test fields and the
    degenerate flag instead of an error.
    """
    x = np.asarray(returns, dtype=np.float64)
    if x.ndim != 1:
        x = x.reshape(-1)
    n = x.size
    if n < 2:
        raise InsufficientDataError(f"need at least 2 observations, got {n}")
    mean = float(x.mean())
    std = float(x.std(ddof=1))
    q25, q50, q75 = (float(v) for v in np.percentile(x, [25, 50, 75]))
    if x.min() == x.max():  # constant series: shape and normality are undefined
        return StatsRecord(
            n, float(x[0]), 0.0, float(x.min()), q25, q50, q75, float(x.max()),
            float("nan"), float("nan"), float("nan"), float("nan"), degenerate=True,
        )
    centered = x - mean
    m2 = float(np.mean(centered**2))
    skew = float(np.mean(centered**3)) / m2**1.5
    kurt = float(np.mean(centered**4)) / m2**2 - 3.0
    ks_stat, ks_p = ks_normal_test(x)
    return StatsRecord(
        n, mean, std, float(x.min()), q25, q50, q75, float(x.max()),
        skew, kurt, ks_stat, ks_p,
    )


def kolmogorov_pvalue(lam: float, terms: int = 100) -> float:
    """Asymptotic Kolmogorov tail probability Q(lam), series truncated."""
    if lam <= 0:
        return 1.0
    k = np.arange(1, terms + 1)
    total = 2.0 * np.sum((-1.0) ** (k - 1) * np.exp(-2.0 * (k * lam) ** 2))
    return float(min(max(total, 0.0), 1.0))


def ks_normal_test(returns: np.ndarray) -> Tuple[float, float]:
    """Kolmogorov-Smirnov statistic against a normal fitted by mean/std.

    The statistic is sup |ECDF - Phi((x - mean)/std)| evaluated at the
    sample atoms from both sides; the p-value uses the asymptotic
    Kolmogorov distribution at sqrt(n) * statistic.
    """
    x = np.sort(np.asarray(returns, dtype=np.float64).reshape(-1))
    n = x.size
    if n < 2:
        raise InsufficientDataError(f"need at least 2 observations, got {n}")
    std = float(x.std(ddof=1))
    if std == 0.0 or x[0] == x[-1]:  # x is sorted, so equal ends mean constant
        raise DomainError("zero variance: normal fit undefined")
    cdf = ndtr((x - x.mean()) / std)
    ecdf_hi = np.arange(1, n + 1) / n
    ecdf_lo = np.arange(0, n) / n
    stat = float(max(np.max(ecdf_hi - cdf), np.max(cdf - ecdf_lo)))
    return stat, kolmogorov_pvalue(np.sqrt(n) * stat)


def wasserstein_1d(a: np.ndarray, b: np.ndarray) -> float:
    """First Wasserstein distance between two empirical distributions.

    Computed as the integral of |F_a - F_b| over the merged support. For
    equal-length samples this equals the mean absolute difference of the
    sorted samples.
    """
    a = np.sort(np.asarray(a, dtype=np.float64).reshape(-1))
    b = np.sort(np.asarray(b, dtype=np.float64).reshape(-1))
    if a.size == 0 or b.size == 0:
        raise InsufficientDataError("empty sample")
    merged = np.sort(np.concatenate([a, b]), kind="mergesort")
    deltas = np.diff(merged)
    f_a = np.searchsorted(a, merged[:-1], side="right") / a.size
    f_b = np.searchsorted(b, merged[:-1], side="right") / b.size
    return float(np.sum(np.abs(f_a - f_b) * deltas))
