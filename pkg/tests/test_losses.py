import numpy as np
import pytest
from pydantic import ValidationError

from price_core.diffcore import Tensor
from price_core.errors import ContractError, DimensionError
from price_core.gradcheck import gradient_check
from price_core.losses import HuberDelta, huber_loss, huber_values, mse, rmse


def test_huber_zero_residual():
    y = Tensor([1.0, -2.0, 3.5])
    assert huber_loss(y, Tensor(y.data)).item() == 0.0


def test_huber_hand_evaluated_fixture():
    # 0.5 * 0.5**2 = 0.125 and 1 * (2 - 0.5) = 1.5
    loss = huber_loss(Tensor([0.0, 0.0]), Tensor([0.5, 2.0]), HuberDelta(delta=1.0))
    assert loss.item() == 0.8125


def test_huber_branches_meet_at_delta():
    for delta in (0.25, 1.0, 3.0):
        quadratic = 0.5 * delta ** 2
        linear = delta * (delta - 0.5 * delta)
        assert quadratic == linear
        assert huber_values(np.array([delta, -delta]), delta).tolist() == [quadratic, quadratic]
        below = huber_values(np.array([delta - 1e-9]), delta)[0]
        above = huber_values(np.array([delta + 1e-9]), delta)[0]
        assert abs(above - below) < 1e-8


def test_huber_symmetric_and_bounded():
    r = np.random.default_rng(0).normal(0, 3, size=200)
    assert np.array_equal(huber_values(r, 1.0), huber_values(-r, 1.0))
    assert np.all(huber_values(r, 1.0) <= 0.5 * r * r)


def test_huber_delta_must_be_positive():
    with pytest.raises(ValidationError):
        HuberDelta(delta=0.0)
    with pytest.raises(ValidationError):
        huber_loss(Tensor([1.0]), Tensor([0.0]), -1.0)


def test_huber_shape_and_empty_checks():
    with pytest.raises(DimensionError):
        huber_loss(Tensor([1.0, 2.0]), Tensor([1.0]))
    with pytest.raises(ContractError):
        huber_loss(Tensor(np.zeros(0)), Tensor(np.zeros(0)))


def test_huber_gradient_straddling_delta():
    y = Tensor(np.zeros(7))
    results = gradient_check('huber', lambda t: huber_loss(y, t['y_hat'], 1.0),
                             {'y_hat': np.array([0.2, -0.9999, 0.9999, 1.0001, -1.0001, 3.0, -0.4])},
                             atol=1e-6)
    assert results[0].passed
    assert results[0].max_abs_err < 1e-6


def test_metric_examples():
    y = np.array([1.0, 2.0, 3.0])
    assert mse(y, y) == 0.0 and rmse(y, y) == 0.0
    assert mse(y, y + 1.0) == 1.0 and rmse(y, y - 1.0) == 1.0


def test_rmse_squared_is_mse():
    rng = np.random.default_rng(1)
    for _ in range(50):
        y, y_hat = rng.normal(size=30), rng.normal(size=30)
        assert abs(rmse(y, y_hat) ** 2 - mse(y, y_hat)) < 1e-12
    # a reported RMSE of 1.23 and MSE of 1.51 agree after rounding
    assert round(np.sqrt(1.51), 2) == 1.23
    assert abs(1.23 ** 2 - 1.51) < 0.005


def test_metric_checks():
    with pytest.raises(DimensionError):
        mse([1.0, 2.0], [1.0])
    with pytest.raises(ContractError):
        rmse([], [])
