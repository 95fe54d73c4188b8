"""Run configuration: one JSON file, deep-merged over full defaults.

The defaults encode the reference experiment: 0.1% fee, six windows of
24 in-sample months (20% validation) plus 6 test months, the published
strategy grids, and the model sampling space. A config file overrides
only what it names; unknown keys fail loudly. Every run can write back
the fully resolved dictionary so outputs carry their exact settings.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from .errors import ConfigError
from .informer import InformerConfig
from .intervals import parse_interval
from .search import SearchSpace

FIBONACCI_WINDOWS = (2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987, 1597, 2584)
RETURN_THRESHOLDS = (0.001, 0.002, 0.003, 0.004, 0.005, 0.006, 0.007)
QUANTILE_LEVEL_CHOICES = (0.75, 0.9, 0.95, 0.97, 0.98, 0.99)

DEFAULTS: Dict[str, Any] = {
    "data": {
        "klines_csv": None,
        "interval": "5min",
        "exogenous": [],
    },
    "fee": 0.001,
    "seed": 0,
    "output_dir": "runs",
    "windows": {
        "count": 6,
        "in_sample_months": 24.0,
        "out_sample_months": 6.0,
        "validation_fraction": 0.2,
    },
    "strategies": {
        "macd": {
            "fast": list(FIBONACCI_WINDOWS),
            "slow": list(FIBONACCI_WINDOWS),
            "signal": list(FIBONACCI_WINDOWS),
            "short": [False, True],
        },
        "rsi": {
            "window": list(FIBONACCI_WINDOWS),
            "enter_long": [None, 70, 75, 80, 85, 90, 95],
            "exit_long": [None, 5, 10, 15, 20, 25, 30],
            "enter_short": [None, 5, 10, 15, 20, 25, 30],
            "exit_short": [None, 70, 75, 80, 85, 90, 95],
        },
        "informer_rmse": {
            "enter_long": [None, *RETURN_THRESHOLDS],
            "exit_long": [None, *(-t for t in RETURN_THRESHOLDS)],
            "enter_short": [None, *(-t for t in RETURN_THRESHOLDS)],
            "exit_short": [None, *RETURN_THRESHOLDS],
        },
        "informer_quantile": {
            "enter_long": [None, *QUANTILE_LEVEL_CHOICES],
            "exit_long": [None, *QUANTILE_LEVEL_CHOICES],
            "enter_short": [None, *QUANTILE_LEVEL_CHOICES],
            "exit_short": [None, *QUANTILE_LEVEL_CHOICES],
            "threshold": [0.001, 0.002, 0.003],
        },
        "informer_gmadl": {
            "enter_long": [None, *RETURN_THRESHOLDS],
            "exit_long": [None, *(-t for t in RETURN_THRESHOLDS)],
            "enter_short": [None, *(-t for t in RETURN_THRESHOLDS)],
            "exit_short": [None, *RETURN_THRESHOLDS],
        },
    },
    "model": {
        "base": {
            "past_window": 20,
            "cat_embed_dim": 8,
            "model_dim": 32,
            "ffn_dim": 64,
            "heads": 2,
            "encoder_layers": 1,
            "decoder_layers": 1,
            "dropout": 0.0,
            "sampling_factor": 5.0,
            "batch_size": 128,
            "learning_rate": 1e-4,
            "max_epochs": 40,
            "patience": 15,
            "validate_every": 300,
            "gmadl_a": 100.0,
            "gmadl_b": 2.0,
        },
        "search": {
            "sample_size": 30,
            "space": {
                "past_window": list(range(20, 121)),
                "batch_size": [64, 128, 256],
                "learning_rate": [0.001, 0.0005, 0.0001],
                "model_dim": [256, 512, 1024],
                "ffn_dim": [256, 512, 1024],
                "heads": [1, 2, 4, 6],
                "dropout": [0.05, 0.1, 0.2, 0.3],
                "encoder_layers": [1, 2, 3],
                "decoder_layers": [1, 2, 3],
            },
        },
    },
    "sensitivity": {
        "validation_months": [3, 6, 9, 12],
        "window_counts": [3, 6, 12],
        "top_n": 10,
    },
}

_STRATEGY_CONSTRAINTS = {
    "macd": (lambda c: c["fast"] < c["slow"],),
}

# Multi-head projections slice the model dimension evenly.
_MODEL_CONSTRAINTS = (lambda c: c["model_dim"] % c["heads"] == 0,)


@dataclass(frozen=True)
class WindowLayout:
    count: int
    in_sample_months: float
    out_sample_months: float
    validation_fraction: float


@dataclass(frozen=True)
class RunConfig:
    """Typed view over the merged configuration dictionary."""

    klines_csv: Optional[str]
    interval_ms: int
    exogenous: Tuple[Dict[str, str], ...]
    fee: float
    seed: int
    output_dir: str
    windows: WindowLayout
    raw: Dict[str, Any]

    def strategy_space(self, strategy: str) -> SearchSpace:
        """The configured hyperparameter grid for one strategy."""
        spaces = self.raw["strategies"]
        if strategy not in spaces:
            raise ConfigError(
                f"no search space for strategy {strategy!r}; "
                f"configured: {sorted(spaces)}"
            )
        axes = tuple(
            (name, tuple(values)) for name, values in spaces[strategy].items()
        )
        return SearchSpace(axes=axes, constraints=_STRATEGY_CONSTRAINTS.get(strategy, ()))

    def model_space(self) -> SearchSpace:
        axes = tuple(
            (name, tuple(values))
            for name, values in self.raw["model"]["search"]["space"].items()
        )
        names = {name for name, _ in axes}
        constraints = _MODEL_CONSTRAINTS if {"model_dim", "heads"} <= names else ()
        return SearchSpace(axes=axes, constraints=constraints)

    @property
    def model_sample_size(self) -> int:
        return self.raw["model"]["search"]["sample_size"]

    def base_model_config(self, loss_kind: str, num_real: int) -> InformerConfig:
        """An Informer configuration from the `model.base` block."""
        return InformerConfig(
            num_real=num_real, loss_kind=loss_kind, **self.raw["model"]["base"]
        )

    def resolved(self) -> Dict[str, Any]:
        """The full merged configuration, safe to serialize."""
        return copy.deepcopy(self.raw)


def _merge(base: Dict[str, Any], override: Dict[str, Any], path: str) -> Dict[str, Any]:
    out = dict(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key '{path}{key}'")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key '{path}{key}' must be an object")
            out[key] = _merge(base[key], value, f"{path}{key}.")
        else:
            out[key] = value
    return out


def _validate(raw: Dict[str, Any], source: str) -> None:
    fee = raw["fee"]
    if not isinstance(fee, (int, float)) or not 0.0 <= fee < 1.0:
        raise ConfigError(f"{source}: fee must be in [0, 1), got {fee!r}")
    layout = raw["windows"]
    if layout["count"] < 1:
        raise ConfigError(f"{source}: windows.count must be >= 1")
    if layout["in_sample_months"] <= 0 or layout["out_sample_months"] <= 0:
        raise ConfigError(f"{source}: window spans must be positive")
    if not 0.0 <= layout["validation_fraction"] < 1.0:
        raise ConfigError(f"{source}: windows.validation_fraction must be in [0, 1)")
    if raw["model"]["search"]["sample_size"] < 1:
        raise ConfigError(f"{source}: model.search.sample_size must be >= 1")
    for entry in raw["data"]["exogenous"]:
        missing = {"path", "name", "frequency"} - set(entry)
        if missing:
            raise ConfigError(
                f"{source}: exogenous entry missing keys {sorted(missing)}"
            )


def config_from_dict(user: Dict[str, Any], source: str = "<dict>") -> RunConfig:
    """Merge a user dictionary over the defaults and validate it."""
    raw = _merge(copy.deepcopy(DEFAULTS), user, "")
    _validate(raw, source)
    interval_ms = parse_interval(raw["data"]["interval"])
    return RunConfig(
        klines_csv=raw["data"]["klines_csv"],
        interval_ms=interval_ms,
        exogenous=tuple(raw["data"]["exogenous"]),
        fee=float(raw["fee"]),
        seed=int(raw["seed"]),
        output_dir=raw["output_dir"],
        windows=WindowLayout(
            count=int(raw["windows"]["count"]),
            in_sample_months=float(raw["windows"]["in_sample_months"]),
            out_sample_months=float(raw["windows"]["out_sample_months"]),
            validation_fraction=float(raw["windows"]["validation_fraction"]),
        ),
        raw=raw,
    )


def _resolve_paths(user: Dict[str, Any], base_dir: Path) -> None:
    """Rewrite relative data paths against the config file's directory."""
    data = user.get("data")
    if not isinstance(data, dict):
        return
    csv_path = data.get("klines_csv")
    if isinstance(csv_path, str) and not Path(csv_path).is_absolute():
        data["klines_csv"] = str(base_dir / csv_path)
    for entry in data.get("exogenous", []) or []:
        if isinstance(entry, dict) and isinstance(entry.get("path"), str):
            if not Path(entry["path"]).is_absolute():
                entry["path"] = str(base_dir / entry["path"])


def load_config(path: str | Path) -> RunConfig:
    """Read a JSON config file, apply defaults, and validate."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        user = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(user, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    _resolve_paths(user, path.parent)
    config = config_from_dict(user, str(path))
    if config.klines_csv is not None and not Path(config.klines_csv).exists():
        raise ConfigError(f"{path}: data.klines_csv not found: {config.klines_csv}")
    for entry in config.exogenous:
        if not Path(entry["path"]).exists():
            raise ConfigError(f"{path}: exogenous file not found: {entry['path']}")
    return config
