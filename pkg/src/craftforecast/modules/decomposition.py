from dataclasses import dataclass
import logging

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from numpy.typing import ArrayLike

from craftforecast.common import ConfigException
from craftforecast.numeric.tensor import Array

logger = logging.getLogger(__name__)

__all__ = ["TrendResidual", "moving_avg_trend", "decompose", "odd_kernel", "fit_kernel", "default_kernel"]

# forecast length -> moving average width used for that horizon
HORIZON_KERNELS: dict[int, int] = {7: 15, 14: 15, 30: 30}


@dataclass
class TrendResidual:
    trend: Array
    residual: Array
    kernel: int


def odd_kernel(kernel: int) -> int:
    """
    Centered windows need an odd width, even widths are rounded up.
    """
    if kernel < 1:
        raise ConfigException(f"kernel size must be positive, got {kernel}")
    if kernel % 2 == 0:
        logger.warning(f"kernel size {kernel} is even, using {kernel + 1}")
        return kernel + 1
    return kernel


def default_kernel(P: int) -> int:
    return odd_kernel(HORIZON_KERNELS.get(P, 15))


def fit_kernel(kernel: int, length: int) -> int:
    """
    Largest usable width for a series of the given length, i.e. min(kernel, 2·length − 1).
    """
    return min(kernel, 2 * length - 1)


def moving_avg_trend(series: ArrayLike, kernel: int) -> Array:
    """
    Moving average along the last axis with (k−1)/2 replicated edge values on each side,
    the output keeps the input length.
    """
    values = np.asarray(series, dtype=np.float64)
    n = values.shape[-1]
    if kernel < 1 or kernel % 2 == 0:
        raise ConfigException(f"moving average kernel must be odd and positive, got {kernel}")
    if kernel > 2 * n - 1:
        raise ConfigException(f"moving average kernel {kernel} is too wide for a series of length {n}")
    pad = (kernel - 1) // 2
    widths = [(0, 0)] * (values.ndim - 1) + [(pad, pad)]
    padded = np.pad(values, widths, mode="edge")
    return sliding_window_view(padded, kernel, axis=-1).mean(axis=-1)


def decompose(series: ArrayLike, kernel: int) -> TrendResidual:
    values = np.asarray(series, dtype=np.float64)
    trend = moving_avg_trend(values, kernel)
    return TrendResidual(trend=trend, residual=values - trend, kernel=kernel)
