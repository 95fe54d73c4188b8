"""Market data ingestion, features, windows, and distribution statistics."""
from .exogenous import ExogenousSeries, align_exogenous, load_exogenous
from .features import CAT_NAMES, CAT_SIZES, FeatureFrame, build_features, horizon_rows
from .klines import Candle, CandleSeries, Gap, compute_returns, fill_gaps, load_klines
from .stats import StatsRecord, descriptive_stats, ks_normal_test, wasserstein_1d
from .windows import DataWindow, NormStats, Span, make_windows, make_windows_rows

__all__ = [
    "Candle",
    "CandleSeries",
    "Gap",
    "load_klines",
    "fill_gaps",
    "compute_returns",
    "ExogenousSeries",
    "load_exogenous",
    "align_exogenous",
    "FeatureFrame",
    "build_features",
    "horizon_rows",
    "CAT_NAMES",
    "CAT_SIZES",
    "StatsRecord",
    "descriptive_stats",
    "ks_normal_test",
    "wasserstein_1d",
    "DataWindow",
    "NormStats",
    "Span",
    "make_windows",
    "make_windows_rows",
]
