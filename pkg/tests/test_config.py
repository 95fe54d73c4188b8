"""Configuration loading, merging, and search-space construction tests."""
import copy
import itertools
import json

import pytest

from wflab.config import (
    DEFAULTS,
    FIBONACCI_WINDOWS,
    config_from_dict,
    load_config,
)
from wflab.errors import ConfigError


class TestDefaults:
    def test_empty_dict_gives_reference_settings(self):
        config = config_from_dict({})
        assert config.fee == 0.001
        assert config.interval_ms == 300_000
        assert config.seed == 0
        assert config.output_dir == "runs"
        assert config.klines_csv is None
        assert config.exogenous == ()
        assert config.windows.count == 6
        assert config.windows.in_sample_months == 24.0
        assert config.windows.out_sample_months == 6.0
        assert config.windows.validation_fraction == 0.2

    def test_defaults_not_mutated_by_overrides(self):
        before = copy.deepcopy(DEFAULTS)
        config = config_from_dict({"strategies": {"macd": {"fast": [2, 3]}}})
        config.raw["strategies"]["rsi"]["window"].append(9999)
        config.raw["windows"]["count"] = 99
        assert DEFAULTS == before

    def test_resolved_is_a_detached_snapshot(self):
        config = config_from_dict({"fee": 0.002})
        snapshot = config.resolved()
        assert snapshot["fee"] == 0.002
        snapshot["fee"] = 0.5
        snapshot["strategies"]["macd"]["fast"][0] = -1
        assert config.fee == 0.002
        assert config.raw["strategies"]["macd"]["fast"][0] == 2

    def test_resolved_round_trips_through_json(self):
        config = config_from_dict({})
        dumped = json.dumps(config.resolved(), sort_keys=True)
        assert json.loads(dumped) == config.resolved()


class TestMerge:
    def test_scalar_override(self):
        config = config_from_dict({"fee": 0.0005, "seed": 7})
        assert config.fee == 0.0005
        assert config.seed == 7

    def test_nested_override_keeps_siblings(self):
        config = config_from_dict({"windows": {"count": 3}})
        assert config.windows.count == 3
        assert config.windows.in_sample_months == 24.0
        assert config.windows.validation_fraction == 0.2

    def test_list_values_replace_wholesale(self):
        config = config_from_dict({"strategies": {"macd": {"fast": [2, 3, 5]}}})
        space = config.strategy_space("macd")
        axes = dict(space.axes)
        assert axes["fast"] == (2, 3, 5)
        assert axes["slow"] == FIBONACCI_WINDOWS

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config key 'fees'"):
            config_from_dict({"fees": 0.001})

    def test_unknown_nested_key_names_full_path(self):
        with pytest.raises(ConfigError, match="windows.cout"):
            config_from_dict({"windows": {"cout": 3}})

    def test_object_key_rejects_scalar_value(self):
        with pytest.raises(ConfigError, match="must be an object"):
            config_from_dict({"windows": 6})


class TestValidation:
    @pytest.mark.parametrize("fee", [-0.001, 1.0, 1.5, "0.001"])
    def test_fee_out_of_range(self, fee):
        with pytest.raises(ConfigError, match="fee"):
            config_from_dict({"fee": fee})

    def test_zero_windows_rejected(self):
        with pytest.raises(ConfigError, match="windows.count"):
            config_from_dict({"windows": {"count": 0}})

    @pytest.mark.parametrize(
        "field", ["in_sample_months", "out_sample_months"]
    )
    def test_nonpositive_spans_rejected(self, field):
        with pytest.raises(ConfigError, match="spans must be positive"):
            config_from_dict({"windows": {field: 0}})

    @pytest.mark.parametrize("fraction", [-0.1, 1.0])
    def test_validation_fraction_range(self, fraction):
        with pytest.raises(ConfigError, match="validation_fraction"):
            config_from_dict({"windows": {"validation_fraction": fraction}})

    def test_sample_size_must_be_positive(self):
        with pytest.raises(ConfigError, match="sample_size"):
            config_from_dict({"model": {"search": {"sample_size": 0}}})

    def test_exogenous_entry_needs_all_keys(self):
        with pytest.raises(ConfigError, match="missing keys"):
            config_from_dict(
                {"data": {"exogenous": [{"path": "x.csv", "name": "x"}]}}
            )

    def test_bad_interval_label(self):
        with pytest.raises(ConfigError, match="unrecognized interval"):
            config_from_dict({"data": {"interval": "5 minutes"}})


class TestStrategySpaces:
    def test_macd_counts(self):
        space = config_from_dict({}).strategy_space("macd")
        assert space.raw_size == 16 * 16 * 16 * 2 == 8192
        valid = space.valid_indices()
        pairs = sum(
            1
            for fast, slow in itertools.product(FIBONACCI_WINDOWS, repeat=2)
            if fast < slow
        )
        assert len(valid) == pairs * 16 * 2 == 3840

    def test_rsi_counts(self):
        space = config_from_dict({}).strategy_space("rsi")
        assert space.raw_size == 16 * 7 * 7 * 7 * 7 == 38416
        assert space.constraints == ()

    @pytest.mark.parametrize("strategy", ["informer_rmse", "informer_gmadl"])
    def test_return_threshold_counts(self, strategy):
        space = config_from_dict({}).strategy_space(strategy)
        assert space.raw_size == 8 * 8 * 8 * 8 == 4096
        axes = dict(space.axes)
        assert axes["enter_long"][0] is None
        assert axes["enter_long"][1:] == (0.001, 0.002, 0.003, 0.004, 0.005, 0.006, 0.007)
        assert axes["exit_long"][1:] == (-0.001, -0.002, -0.003, -0.004, -0.005, -0.006, -0.007)

    def test_quantile_counts(self):
        space = config_from_dict({}).strategy_space("informer_quantile")
        assert space.raw_size == 7 * 7 * 7 * 7 * 3 == 7203
        axes = dict(space.axes)
        assert axes["threshold"] == (0.001, 0.002, 0.003)

    def test_unknown_strategy_lists_configured(self):
        with pytest.raises(ConfigError, match="buy_and_hodl"):
            config_from_dict({}).strategy_space("buy_and_hodl")

    def test_axis_order_follows_config(self):
        space = config_from_dict({}).strategy_space("macd")
        assert space.names == ("fast", "slow", "signal", "short")


class TestModelSpace:
    def test_raw_size(self):
        space = config_from_dict({}).model_space()
        assert space.raw_size == 101 * 3 * 3 * 3 * 3 * 4 * 4 * 3 * 3 == 1_178_064

    def test_head_divisibility_enforced(self):
        space = config_from_dict({}).model_space()
        base = {
            "past_window": 20,
            "batch_size": 64,
            "learning_rate": 0.001,
            "model_dim": 256,
            "ffn_dim": 256,
            "dropout": 0.05,
            "encoder_layers": 1,
            "decoder_layers": 1,
        }
        assert space.satisfies({**base, "heads": 4})
        assert not space.satisfies({**base, "heads": 6})
        assert not space.satisfies({**base, "model_dim": 1024, "heads": 6})

    def test_sample_size_default(self):
        assert config_from_dict({}).model_sample_size == 30

    def test_base_model_config_wiring(self):
        config = config_from_dict(
            {"model": {"base": {"past_window": 36, "learning_rate": 0.0005}}}
        )
        model_config = config.base_model_config("gmadl", num_real=23)
        assert model_config.past_window == 36
        assert model_config.learning_rate == 0.0005
        assert model_config.loss_kind == "gmadl"
        assert model_config.num_real == 23
        assert model_config.heads == 2


class TestLoadConfig:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"fee": 0.002, "data": {"interval": "30min"}}))
        config = load_config(path)
        assert config.fee == 0.002
        assert config.interval_ms == 1_800_000

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_config(path)

    def test_top_level_must_be_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2, 3]")
        with pytest.raises(ConfigError, match="JSON object"):
            load_config(path)

    def test_relative_data_path_resolved_against_config_dir(self, tmp_path):
        data = tmp_path / "candles.csv"
        data.write_text("open_time,open,high,low,close,volume,close_time\n")
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"data": {"klines_csv": "candles.csv"}}))
        config = load_config(path)
        assert config.klines_csv == str(data)

    def test_absolute_data_path_kept(self, tmp_path):
        data = tmp_path / "candles.csv"
        data.write_text("open_time,open,high,low,close,volume,close_time\n")
        path = tmp_path / "sub"
        path.mkdir()
        config_path = path / "run.json"
        config_path.write_text(json.dumps({"data": {"klines_csv": str(data)}}))
        assert load_config(config_path).klines_csv == str(data)

    def test_missing_data_file_rejected(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"data": {"klines_csv": "nope.csv"}}))
        with pytest.raises(ConfigError, match="klines_csv not found"):
            load_config(path)

    def test_exogenous_paths_resolved_and_checked(self, tmp_path):
        exo = tmp_path / "rates.csv"
        exo.write_text("open_time,close\n")
        path = tmp_path / "run.json"
        entry = {"path": "rates.csv", "name": "rates", "frequency": "1d"}
        path.write_text(json.dumps({"data": {"exogenous": [entry]}}))
        config = load_config(path)
        assert config.exogenous[0]["path"] == str(exo)

        path.write_text(
            json.dumps(
                {
                    "data": {
                        "exogenous": [
                            {"path": "gone.csv", "name": "x", "frequency": "1d"}
                        ]
                    }
                }
            )
        )
        with pytest.raises(ConfigError, match="exogenous file not found"):
            load_config(path)
