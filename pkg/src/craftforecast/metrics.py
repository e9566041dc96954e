import logging
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from craftforecast.common import ConfigException, NumericException, ShapeException, UndefinedMetricException
from craftforecast.data.samples import ForecastSample

logger = logging.getLogger(__name__)

__all__ = ["eval_point_metrics", "wmape", "iwr", "phdi", "pearson", "pearson_by_horizon"]


def _pair(yhat: ArrayLike, y: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    yhat = np.asarray(yhat, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if yhat.shape != y.shape:
        raise ShapeException(f"metrics: {yhat.size} predictions for {y.size} labels")
    if y.size == 0:
        raise ShapeException("metrics: no values to score")
    return yhat, y


def wmape(yhat: ArrayLike, y: ArrayLike) -> float:
    """
    Σ|y − ŷ| / Σy.
    """
    yhat, y = _pair(yhat, y)
    total = y.sum()
    if total == 0:
        raise UndefinedMetricException("wMAPE is undefined when all labels are 0")
    return float(np.abs(y - yhat).sum() / total)


def eval_point_metrics(yhat: ArrayLike, y: ArrayLike) -> tuple[float, float, float | None]:
    """
    (mae, rmse, wmape), wmape is None when the labels sum to 0.
    """
    yhat, y = _pair(yhat, y)
    error = y - yhat
    mae = float(np.abs(error).mean())
    rmse = float(np.sqrt((error**2).mean()))
    try:
        return mae, rmse, wmape(yhat, y)
    except UndefinedMetricException as e:
        logger.warning(e.args[0])
        return mae, rmse, None


def iwr(yhat: ArrayLike, y: ArrayLike, b: float = 1.0) -> float:
    """
    Inventory waste rate: the wasted share (ŷ − y)/ŷ of every prediction that exceeds the label
    by more than the buffer b, 0 for the others, averaged.
    """
    yhat, y = _pair(yhat, y)
    over = yhat > y + b
    if np.any(yhat[over] <= 0):
        raise NumericException("iwr: over-prediction with a non-positive forecast")
    waste = np.zeros_like(yhat)
    waste[over] = (yhat[over] - y[over]) / yhat[over]
    return float(waste.mean())


def phdi(yhat: ArrayLike, y: ArrayLike, b: float = 1.0) -> float:
    """
    Share of predictions more than the buffer b below the label, hotels that run out of rooms.
    """
    yhat, y = _pair(yhat, y)
    return float((yhat < y - b).mean())


def pearson(x: ArrayLike, y: ArrayLike) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape or x.size < 2:
        raise ShapeException(f"pearson: need two vectors of equal length >= 2, got {x.size} and {y.size}")
    dx = x - x.mean()
    dy = y - y.mean()
    norm = np.sqrt((dx**2).sum() * (dy**2).sum())
    if norm == 0:
        raise UndefinedMetricException("pearson: correlation with a constant vector is undefined")
    return float(np.clip((dx * dy).sum() / norm, -1.0, 1.0))


def pearson_by_horizon(samples: Sequence[ForecastSample], p_max: int) -> list[float]:
    """
    For p = 1..p_max, the correlation across samples between the look-back label total and the
    bookings already on hand at the origin for the first p forecast days.
    """
    if len(samples) < 2:
        raise ShapeException("pearson_by_horizon needs at least two samples")
    P = samples[0].P
    if not 1 <= p_max <= P:
        raise ConfigException(f"p_max must lie in 1..{P}, got {p_max}")
    label_totals = np.array([sample.y_L.sum() for sample in samples])
    on_hand = np.array([np.diag(sample.c_P.values)[:p_max] for sample in samples])
    cumulative = np.cumsum(on_hand, axis=1)
    return [pearson(label_totals, cumulative[:, p - 1]) for p in range(1, p_max + 1)]
