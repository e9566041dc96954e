import numpy as np
import pytest

from craftforecast.common import DataException, ShapeException
from craftforecast.losses import demand_loss, squared_loss, total_loss
from craftforecast.models import LossWeights
from craftforecast.numeric import Parameter


def test_demand_loss_in_band():
    y = np.array([3.0, 4.0])
    assert demand_loss(y, y, [2.0, 2.0], [5.0, 5.0], 1.0).item() == 0.0


def test_demand_loss_below():
    assert demand_loss([1.0], [3.0], [2.0], [5.0], 1.0).item() == pytest.approx(5.0)


def test_demand_loss_above():
    assert demand_loss([6.0], [3.0], [2.0], [5.0], 0.5).item() == pytest.approx(9.5)


def test_demand_loss_at_least_squared_error():
    rng = np.random.default_rng(0)
    y = rng.uniform(2, 8, size=200)
    y_l, y_u = y - rng.uniform(0, 2, size=200), y + rng.uniform(0, 2, size=200)
    yhat = y + rng.normal(0, 3, size=200)
    inside = (yhat >= y_l) & (yhat <= y_u)
    for i in range(200):
        loss = demand_loss(yhat[i : i + 1], y[i : i + 1], y_l[i : i + 1], y_u[i : i + 1], 1.0).item()
        mse = squared_loss(yhat[i : i + 1], y[i : i + 1]).item()
        assert loss >= mse
        assert (loss == mse) == bool(inside[i])


def test_demand_loss_continuous_at_bounds():
    delta = 1e-6
    for bound in (2.0, 5.0):
        below = demand_loss([bound - delta], [3.0], [2.0], [5.0], 1.0).item()
        above = demand_loss([bound + delta], [3.0], [2.0], [5.0], 1.0).item()
        assert abs(below - above) < 1e-4


def test_demand_loss_gradient():
    yhat = Parameter(np.array([1.0, 4.0, 6.0]), "yhat")
    demand_loss(yhat, [3.0, 3.0, 3.0], [2.0, 2.0, 2.0], [5.0, 5.0, 5.0], 1.0).backward()
    # d/dŷ of (ŷ−y)² + (ŷ−bound)², divided by the entry count
    assert np.allclose(yhat.grad, [(2 * -2 + 2 * -1) / 3, 2 * 1 / 3, (2 * 3 + 2 * 1) / 3])


def test_demand_loss_bad_bounds():
    with pytest.raises(DataException):
        demand_loss([1.0], [3.0], [5.0], [2.0], 1.0)
    with pytest.raises(ShapeException):
        demand_loss([1.0, 2.0], [3.0], [2.0], [5.0], 1.0)


def test_total_loss():
    weights = LossWeights()
    assert total_loss(1.0, 1.0, 1.0, 1.0, weights) == pytest.approx(503.1)
    assert total_loss(2.0, 3.0, 4.0, 5.0, LossWeights(alpha1=0, alpha2=0, alpha3=0)) == 2.0
    assert total_loss(3.0, 3.0, 3.0, 3.0, weights) == pytest.approx(3 * 503.1)
