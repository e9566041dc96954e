import logging

import numpy as np
from numpy.typing import ArrayLike

from craftforecast.common import DataException, ShapeException
from craftforecast.models import LossWeights
from craftforecast.numeric.tensor import Tensor, _lift

logger = logging.getLogger(__name__)

__all__ = ["demand_loss", "squared_loss", "total_loss"]


def squared_loss(yhat: Tensor | ArrayLike, y: ArrayLike) -> Tensor:
    yhat = _lift(yhat)
    y = np.asarray(y, dtype=np.float64)
    if yhat.shape != y.shape:
        raise ShapeException(f"squared loss: prediction {yhat.shape} and label {y.shape} differ")
    return ((yhat - y) ** 2).mean()


def demand_loss(yhat: Tensor | ArrayLike, y: ArrayLike, y_l: ArrayLike, y_u: ArrayLike, beta: float) -> Tensor:
    """
    Squared error plus β times the squared distance to the demand band [y_l, y_u] whenever the
    prediction leaves it, averaged over all entries.
    """
    yhat = _lift(yhat)
    y, y_l, y_u = (np.asarray(value, dtype=np.float64) for value in (y, y_l, y_u))
    if not yhat.shape == y.shape == y_l.shape == y_u.shape:
        raise ShapeException(f"demand loss: shapes {yhat.shape}, {y.shape}, {y_l.shape}, {y_u.shape} differ")
    if np.any(y_l > y_u):
        raise DataException("demand loss: lower bound above upper bound")
    below = yhat.data < y_l
    above = yhat.data > y_u
    penalty = ((yhat - y_l) * below) ** 2 + ((yhat - y_u) * above) ** 2
    return ((yhat - y) ** 2 + penalty * beta).mean()


def total_loss(
    L_y: Tensor | float, L_be_k: Tensor | float, L_be_y: Tensor | float, L_recon: Tensor | float, weights: LossWeights
) -> Tensor | float:
    return L_y + weights.alpha1 * L_be_k + weights.alpha2 * L_be_y + weights.alpha3 * L_recon
