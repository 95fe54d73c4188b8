"""wflab: a walk-forward backtesting laboratory.

Candle ingestion and feature engineering, technical and forecast-driven
trading strategies, fee-aware rolling-window evaluation, hyperparameter
search, and statistical comparison against buy-and-hold.
"""

__version__ = "0.1.0"
