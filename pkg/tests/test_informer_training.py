"""Training loop contracts: smoke optimization, determinism, early stop,
divergence handling, checkpoint restoration, and sample extraction."""
import math

import numpy as np
import pytest

import wflab.informer.training as training_mod
from wflab.data.features import build_features
from wflab.data.windows import make_windows_rows
from wflab.errors import DivergenceError, InsufficientDataError
from wflab.informer.config import InformerConfig
from wflab.informer.model import init_model
from wflab.informer.training import SampleSet, train, validation_loss
from wflab.synthetic import make_sine_candles

INTERVAL_30MIN = 30 * 60 * 1000


def toy_frame(n=1300, seed=7, amplitude=0.004, noise=0.001):
    candles = make_sine_candles(
        n, INTERVAL_30MIN, period=48, amplitude=amplitude, noise=noise, seed=seed
    )
    return build_features(candles)


def toy_config(**overrides):
    base = dict(
        num_real=23,  # base feature set, no exogenous columns
        cat_sizes=(24, 7),
        cat_embed_dim=2,
        past_window=6,
        model_dim=8,
        ffn_dim=12,
        heads=2,
        encoder_layers=1,
        decoder_layers=1,
        dropout=0.0,
        loss_kind="rmse",
        batch_size=64,
        learning_rate=3e-3,
        max_epochs=3,
        patience=5,
        validate_every=4,
    )
    base.update(overrides)
    return InformerConfig(**base)


@pytest.fixture(scope="module")
def frame():
    return toy_frame()


@pytest.fixture(scope="module")
def window(frame):
    return make_windows_rows(frame, 1, 700, 120, val_fraction=0.2)[0]


class TestSampleSet:
    def test_targets_exclude_warmup_context(self, frame, window):
        samples = SampleSet(frame, window.train, 6, window.normalization)
        assert samples.targets[0] == max(window.train.start, frame.warmup + 6)
        assert samples.targets[-1] == window.train.stop - 1

    def test_batch_shapes_and_alignment(self, frame, window):
        n = 6
        samples = SampleSet(frame, window.train, n, window.normalization)
        rows = samples.targets[:5]
        batch = samples.batch(rows)
        assert batch.real.shape == (5, n, frame.num_real)
        assert batch.cats.shape == (5, n, 2)
        assert batch.targets.shape == (5, 1)
        np.testing.assert_array_equal(batch.targets[:, 0], frame.returns[rows])
        normalized = window.normalization.apply(frame.real)
        np.testing.assert_array_equal(batch.real[0], normalized[rows[0] - n : rows[0]])

    def test_full_span_usable_when_past_warmup(self, frame, window):
        samples = SampleSet(frame, window.validation, 6, window.normalization)
        assert len(samples) == window.validation.stop - window.validation.start

    def test_empty_span_rejected(self, frame, window):
        from wflab.data.windows import Span

        with pytest.raises(InsufficientDataError):
            SampleSet(frame, Span(0, frame.warmup), 6, window.normalization)


class TestTraining:
    def test_smoke_improves_on_baseline(self, frame, window):
        config = toy_config(max_epochs=5)
        model = init_model(config, seed=1)
        val_samples = SampleSet(frame, window.validation, config.past_window, window.normalization)
        initial = validation_loss(model, val_samples, config)
        model, log = train(model, frame, window, seed=2)
        assert log.best_val_loss < initial
        assert log.points[0].val_loss == initial
        assert log.points[0].batch == 0
        assert math.isnan(log.points[0].train_loss)

    def test_determinism(self, frame, window):
        config = toy_config(max_epochs=1)
        a, log_a = train(init_model(config, seed=3), frame, window, seed=4)
        b, log_b = train(init_model(config, seed=3), frame, window, seed=4)
        assert log_a.lines() == log_b.lines()
        for ta, tb in zip(a.parameters(), b.parameters()):
            np.testing.assert_array_equal(ta.data, tb.data)

    def test_seed_matters(self, frame, window):
        config = toy_config(max_epochs=1)
        _, log_a = train(init_model(config, seed=3), frame, window, seed=4)
        _, log_b = train(init_model(config, seed=3), frame, window, seed=5)
        assert log_a.lines() != log_b.lines()

    def test_patience_one_stops_at_first_check(self, frame, window, monkeypatch):
        monkeypatch.setattr(training_mod, "validation_loss", lambda *a: 1.0)
        config = toy_config(patience=1, max_epochs=10, validate_every=2)
        model = init_model(config, seed=6)
        model, log = train(model, frame, window, seed=7)
        assert log.stopped_early
        # baseline point plus exactly one periodic check
        assert len(log.points) == 2
        assert log.points[1].batch == 2
        assert not log.points[1].improved
        assert log.best_batch == 0

    def test_early_stop_restores_best(self, frame, window):
        config = toy_config(max_epochs=2, validate_every=3, patience=2)
        model = init_model(config, seed=8)
        model, log = train(model, frame, window, seed=9)
        val_samples = SampleSet(frame, window.validation, config.past_window, window.normalization)
        assert validation_loss(model, val_samples, config) == log.best_val_loss

    def test_divergence_in_validation(self, frame, window, monkeypatch):
        monkeypatch.setattr(training_mod, "validation_loss", lambda *a: math.nan)
        config = toy_config()
        with pytest.raises(DivergenceError):
            train(init_model(config, seed=10), frame, window, seed=11)

    def test_divergence_in_training_loss(self, frame, window, monkeypatch):
        from wflab.autodiff.tensor import Tensor

        def bad_loss_fn(config):
            return lambda y, y_hat: Tensor(np.array(math.nan))

        monkeypatch.setattr(training_mod, "make_loss_fn", bad_loss_fn)
        monkeypatch.setattr(training_mod, "validation_loss", lambda *a: 1.0)
        with pytest.raises(DivergenceError, match="training loss"):
            train(init_model(toy_config(), seed=12), frame, window, seed=13)

    def test_max_epochs_bound(self, frame, window):
        config = toy_config(max_epochs=1, patience=1000)
        _, log = train(init_model(config, seed=14), frame, window, seed=15)
        assert log.epochs_run == 1
        assert not log.stopped_early

    def test_quantile_and_gmadl_paths(self, frame, window):
        for kind in ("quantile", "gmadl"):
            config = toy_config(
                loss_kind=kind, max_epochs=1, quantile_levels=(0.1, 0.5, 0.9)
            )
            model, log = train(init_model(config, seed=16), frame, window, seed=17)
            assert log.loss_kind == kind
            assert all(math.isfinite(p.val_loss) for p in log.points)

    def test_log_lines_format(self, frame, window):
        config = toy_config(max_epochs=1)
        _, log = train(init_model(config, seed=18), frame, window, seed=19)
        lines = log.lines()
        assert lines[0].startswith("loss=rmse seed=19")
        assert lines[-1].startswith("best=")
        assert all("val=" in line for line in lines[1:-1])
