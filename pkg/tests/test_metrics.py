import numpy as np
import pytest

from craftforecast.common import ConfigException, NumericException, UndefinedMetricException
from craftforecast.data.events import BookingEvent
from craftforecast.data.samples import build_sample
from craftforecast.metrics import eval_point_metrics, iwr, pearson, pearson_by_horizon, phdi, wmape


def test_point_metrics():
    assert eval_point_metrics([1.0, 3.0], [1.0, 3.0]) == (0.0, 0.0, 0.0)
    mae, rmse, w = eval_point_metrics([2.0, 3.0], [1.0, 3.0])
    assert mae == pytest.approx(0.5)
    assert rmse == pytest.approx(np.sqrt(0.5))
    assert w == pytest.approx(0.25)


def test_wmape_undefined():
    with pytest.raises(UndefinedMetricException):
        wmape([1.0, 2.0], [0.0, 0.0])
    mae, rmse, w = eval_point_metrics([1.0, 2.0], [0.0, 0.0])
    assert (mae, w) == (1.5, None)


def test_wmape_scale_invariant():
    rng = np.random.default_rng(0)
    y = rng.uniform(1, 10, size=50)
    yhat = y + rng.normal(size=50)
    assert wmape(7.5 * yhat, 7.5 * y) == pytest.approx(wmape(yhat, y), rel=1e-12)


def test_iwr():
    assert iwr([3.0, 2.0], [3.0, 2.0]) == 0.0
    assert iwr([5.0, 2.0], [3.0, 2.0], b=1) == pytest.approx(0.2)
    assert iwr([4.0], [4.0], b=1) == 0.0
    with pytest.raises(NumericException):
        iwr([-1.0], [-5.0], b=1)


def test_phdi():
    assert phdi([3.0], [3.0]) == 0.0
    assert phdi([1.0], [3.0], b=1) == 1.0
    assert phdi([1.0, 3.0], [3.0, 3.0], b=1) == 0.5


def test_metric_ranges():
    rng = np.random.default_rng(1)
    y = rng.uniform(0, 10, size=1000)
    yhat = rng.uniform(0.1, 20, size=1000)
    assert 0.0 <= iwr(yhat, y) < 1.0
    assert 0.0 <= phdi(yhat, y) <= 1.0


def test_pearson():
    x = np.array([1.0, 2.0, 3.0, 5.0])
    assert pearson(x, x) == pytest.approx(1.0)
    assert pearson(x, -x) == pytest.approx(-1.0)
    assert pearson([1, 2, 3], [1, 2, 4]) == pytest.approx(0.98198, abs=1e-5)
    with pytest.raises(UndefinedMetricException):
        pearson([1, 2, 3], [2, 2, 2])


def test_pearson_by_horizon_self_correlation(hand_world_factory):
    # every hotel books a fixed number of rooms for every night 5 days ahead
    rooms = [1, 2, 5, 3]
    events = [
        BookingEvent(f"h{h}", checkin_day=day, booking_day=day - 5, rooms=r) for h, r in enumerate(rooms) for day in range(30)
    ]
    world = hand_world_factory(events, horizon=30, n_hotels=4)
    samples = [build_sample(world, f"h{h}", 15, 6, 3) for h in range(4)]
    correlations = pearson_by_horizon(samples, 3)
    assert len(correlations) == 3
    assert np.allclose(correlations, 1.0)


def test_pearson_by_horizon_noise(hand_world_factory):
    rng = np.random.default_rng(2)
    n, horizon = 500, 20
    rooms = rng.integers(0, 10, size=(n, horizon))
    events = [
        BookingEvent(f"h{h}", checkin_day=day, booking_day=day - 4, rooms=int(rooms[h, day]))
        for h in range(n)
        for day in range(horizon)
    ]
    labels = np.maximum(rng.integers(0, 10, size=(n, horizon)), rooms).astype(float)
    world = hand_world_factory(events, horizon=horizon, n_hotels=n, labels=labels)
    samples = [build_sample(world, f"h{h}", 10, 6, 3) for h in range(n)]
    assert all(abs(c) < 0.2 for c in pearson_by_horizon(samples, 3))


def test_pearson_by_horizon_range(micro_dataset):
    samples = micro_dataset.split("train")
    assert len(pearson_by_horizon(samples, 2)) == 2
    with pytest.raises(ConfigException):
        pearson_by_horizon(samples, 4)
    with pytest.raises(ConfigException):
        pearson_by_horizon(samples, 0)
