import numpy as np
import pytest

from craftforecast.common import ConfigException
from craftforecast.models import horizon_preset
from craftforecast.modules.decomposition import decompose, default_kernel, fit_kernel, moving_avg_trend, odd_kernel


def test_moving_average_example():
    trend = moving_avg_trend([1, 2, 3, 4, 5], 3)
    assert np.allclose(trend, [4 / 3, 2, 3, 4, 14 / 3], atol=1e-12)


def test_constant_series_has_no_residual():
    parts = decompose(np.full(5, 7.0), 5)
    assert np.array_equal(parts.trend, np.full(5, 7.0))
    assert np.array_equal(parts.residual, np.zeros(5))


def test_kernel_one_is_identity():
    series = np.array([3.0, -1.0, 4.0, 1.0])
    parts = decompose(series, 1)
    assert np.array_equal(parts.trend, series)
    assert np.array_equal(parts.residual, np.zeros(4))


def test_ramp_edges():
    # replicated edges pull the ends towards the boundary value
    trend = moving_avg_trend(np.arange(10.0), 5)
    assert np.allclose(trend[2:-2], np.arange(2.0, 8.0))
    assert trend[0] == pytest.approx(0.6)
    assert trend[-1] == pytest.approx(8.4)


def test_decompose_sums_back():
    series = np.random.default_rng(0).normal(size=(3, 12))
    parts = decompose(series, 7)
    assert parts.trend.shape == series.shape
    assert np.allclose(parts.trend + parts.residual, series, atol=1e-12)
    for row, trend in zip(series, parts.trend):
        assert np.allclose(moving_avg_trend(row, 7), trend)


def test_even_or_wide_kernel_rejected():
    with pytest.raises(ConfigException):
        moving_avg_trend(np.arange(5.0), 4)
    with pytest.raises(ConfigException):
        moving_avg_trend(np.arange(3.0), 7)
    with pytest.raises(ConfigException):
        odd_kernel(0)


def test_odd_kernel_rounds_up():
    assert odd_kernel(15) == 15
    assert odd_kernel(30) == 31


def test_fit_kernel():
    assert fit_kernel(15, 30) == 15
    assert fit_kernel(15, 7) == 13
    assert fit_kernel(31, 2) == 3


def test_horizon_presets():
    assert default_kernel(7) == 15
    assert default_kernel(14) == 15
    assert default_kernel(30) == 31
    assert horizon_preset(7) == {"L": 30, "P": 7, "kernel": 15}
    assert horizon_preset(30) == {"L": 180, "P": 30, "kernel": 31}
    with pytest.raises(ConfigException):
        horizon_preset(5)
