"""Loss function point values, shape contracts, convexity, and gradients."""
import math

import numpy as np
import pytest

from helpers import finite_diff_check
from wflab.autodiff.tensor import Tensor
from wflab.errors import ShapeError
from wflab.informer.config import DEFAULT_QUANTILE_LEVELS
from wflab.informer.losses import gmadl_loss, quantile_loss, rmse_loss


class TestRmseLoss:
    def test_perfect_prediction(self):
        y = np.array([[0.1], [0.2]])
        assert rmse_loss(y, Tensor(y.copy())).item() == 0.0

    def test_hand_value(self):
        y = np.array([[0.0], [2.0]])
        y_hat = Tensor(np.zeros((2, 1)))
        assert math.isclose(rmse_loss(y, y_hat).item(), math.sqrt(2.0), rel_tol=1e-15)

    def test_gradient(self):
        rng = np.random.default_rng(0)
        y = rng.normal(size=(5, 1))
        y_hat = Tensor(rng.normal(size=(5, 1)), requires_grad=True)
        finite_diff_check(lambda: rmse_loss(y, y_hat), [y_hat], rng=rng)

    def test_shape_and_empty(self):
        with pytest.raises(ShapeError):
            rmse_loss(np.zeros((2, 1)), Tensor(np.zeros((3, 1))))
        with pytest.raises(ShapeError):
            rmse_loss(np.zeros((0, 1)), Tensor(np.zeros((0, 1))))


class TestQuantileLoss:
    def test_median_hand_value(self):
        loss = quantile_loss(np.array([[1.0]]), Tensor(np.zeros((1, 1))), [0.5])
        assert math.isclose(loss.item(), 0.5, rel_tol=1e-15)

    def test_asymmetry(self):
        under = quantile_loss(np.array([[1.0]]), Tensor(np.zeros((1, 1))), [0.9])
        over = quantile_loss(np.array([[0.0]]), Tensor(np.ones((1, 1))), [0.9])
        assert math.isclose(under.item(), 0.9, rel_tol=1e-15)
        assert math.isclose(over.item(), 0.1, rel_tol=1e-15)

    def test_sums_over_levels(self):
        y = np.array([[1.0]])
        y_hat = Tensor(np.zeros((1, 2)))
        loss = quantile_loss(y, y_hat, [0.25, 0.75])
        assert math.isclose(loss.item(), 0.25 + 0.75, rel_tol=1e-15)

    def test_constant_predictor_minimum_is_empirical_quantile(self):
        rng = np.random.default_rng(1)
        sample = np.sort(rng.normal(size=41))
        y = sample[:, None]
        for q in (0.1, 0.5, 0.9):
            losses = [
                quantile_loss(y, Tensor(np.full((41, 1), c)), [q]).item()
                for c in sample
            ]
            best = sample[int(np.argmin(losses))]
            want = np.quantile(sample, q, method="inverted_cdf")
            order = np.searchsorted(sample, [best, want])
            assert abs(order[0] - order[1]) <= 1

    def test_subgradient_sign_flips_at_target(self):
        y = np.array([[0.3]])
        for q in (0.2, 0.5, 0.8):
            below = Tensor(np.array([[0.3 - 1e-3]]), requires_grad=True)
            loss = quantile_loss(y, below, [q])
            loss.backward()
            assert below.grad[0, 0] < 0
            above = Tensor(np.array([[0.3 + 1e-3]]), requires_grad=True)
            loss = quantile_loss(y, above, [q])
            loss.backward()
            assert above.grad[0, 0] > 0

    def test_convex_in_prediction(self):
        rng = np.random.default_rng(2)
        y = rng.normal(size=(7, 1))
        a = rng.normal(size=(7, 3))
        b = rng.normal(size=(7, 3))
        levels = [0.1, 0.5, 0.9]
        for lam in (0.0, 0.25, 0.5, 0.75, 1.0):
            mid = quantile_loss(y, Tensor(lam * a + (1 - lam) * b), levels).item()
            bound = (
                lam * quantile_loss(y, Tensor(a), levels).item()
                + (1 - lam) * quantile_loss(y, Tensor(b), levels).item()
            )
            assert mid <= bound + 1e-12

    def test_paper_level_set_size(self):
        assert len(DEFAULT_QUANTILE_LEVELS) == 13
        y = np.array([[0.01]])
        y_hat = Tensor(np.zeros((1, 13)))
        loss = quantile_loss(y, y_hat, DEFAULT_QUANTILE_LEVELS)
        want = sum(q * 0.01 for q in DEFAULT_QUANTILE_LEVELS)
        assert math.isclose(loss.item(), want, rel_tol=1e-12)

    def test_gradient(self):
        rng = np.random.default_rng(3)
        y = rng.normal(size=(6, 1))
        y_hat = Tensor(rng.normal(size=(6, 3)), requires_grad=True)
        finite_diff_check(
            lambda: quantile_loss(y, y_hat, [0.1, 0.5, 0.9]), [y_hat], rng=rng
        )

    def test_level_column_mismatch(self):
        with pytest.raises(ShapeError):
            quantile_loss(np.zeros((2, 1)), Tensor(np.zeros((2, 3))), [0.5])


class TestGmadlLoss:
    def test_zero_target_and_zero_prediction(self):
        y_hat = Tensor(np.array([[0.5]]))
        assert gmadl_loss(np.array([[0.0]]), y_hat).item() == 0.0
        y_hat0 = Tensor(np.array([[0.0]]))
        assert gmadl_loss(np.array([[0.04]]), y_hat0).item() == 0.0

    def test_point_value_against_high_precision_oracle(self):
        import mpmath

        mpmath.mp.dps = 50
        y = mpmath.mpf("0.01")
        want = float(-(1 / (1 + mpmath.e ** (-100 * y * y)) - mpmath.mpf("0.5")) * y**2)
        got = gmadl_loss(np.array([[0.01]]), Tensor(np.array([[0.01]]))).item()
        assert abs(got - want) < 1e-12
        # the oracle value itself: about -2.4999791666e-07
        assert math.isclose(want, -2.4999791666e-07, rel_tol=1e-9)

    def test_sign_rule(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            y = float(rng.normal(0.0, 0.02))
            y_hat = float(rng.normal(0.0, 0.02))
            value = gmadl_loss(
                np.array([[y]]), Tensor(np.array([[y_hat]])), 100.0, 2.0
            ).item()
            if y != 0.0 and np.sign(y) == np.sign(y_hat) and y_hat != 0.0:
                assert value < 0.0
            else:
                assert value >= 0.0

    def test_magnitude_bound(self):
        rng = np.random.default_rng(5)
        y = rng.normal(0.0, 0.02, size=(50, 1))
        y_hat = Tensor(rng.normal(0.0, 0.02, size=(50, 1)))
        b = 2.0
        value = abs(gmadl_loss(y, y_hat, 100.0, b).item())
        assert value <= float(np.mean(0.5 * np.abs(y) ** b)) + 1e-15

    def test_b_zero_pure_direction(self):
        y = np.array([[0.5]])
        y_hat = Tensor(np.array([[10.0]]))
        value = gmadl_loss(y, y_hat, 100.0, 0.0).item()
        assert math.isclose(value, -0.5, rel_tol=1e-9)  # saturated sigmoid

    def test_gradient(self):
        rng = np.random.default_rng(6)
        y = rng.normal(0.0, 0.02, size=(6, 1))
        y_hat = Tensor(rng.normal(0.0, 0.02, size=(6, 1)), requires_grad=True)
        finite_diff_check(
            lambda: gmadl_loss(y, y_hat, 100.0, 2.0), [y_hat], rng=rng,
            abs_floor=1e-10,
        )

    def test_parameter_validation(self):
        with pytest.raises(ShapeError):
            gmadl_loss(np.zeros((1, 1)), Tensor(np.zeros((1, 1))), a=0.0)
        with pytest.raises(ShapeError):
            gmadl_loss(np.zeros((1, 1)), Tensor(np.zeros((1, 1))), b=-1.0)
