"""
DLinear-style baseline without booking curves: the look-back labels are split into trend and
residual and each part is mapped to the forecast window by one linear layer.
"""

from dataclasses import dataclass
import logging

import numpy as np

from craftforecast.common import ConfigException
from craftforecast.data.batch import value_scale
from craftforecast.data.dataset import Dataset
from craftforecast.data.samples import ForecastSample
from craftforecast.execution.evaluate import metric_report
from craftforecast.execution.train import check_windows
from craftforecast.losses import squared_loss
from craftforecast.models import MetricReport, TrainConfig
from craftforecast.modules.decomposition import decompose, fit_kernel
from craftforecast.numeric.ops import linear_forward
from craftforecast.numeric.optim import Adam, xavier_init
from craftforecast.numeric.params import ParameterSet
from craftforecast.numeric.tensor import Array, Parameter, Tensor

logger = logging.getLogger(__name__)

__all__ = ["DLinearParams", "dlinear_forward", "baseline_dlinear"]


@dataclass
class DLinearParams:
    trend_W: Parameter
    trend_b: Parameter
    residual_W: Parameter
    residual_b: Parameter

    @classmethod
    def init(cls, L: int, P: int, rng: np.random.Generator) -> "DLinearParams":
        return cls(
            trend_W=Parameter(xavier_init(L, P, rng), "dlinear.trend.W"),
            trend_b=Parameter(np.zeros(P), "dlinear.trend.b"),
            residual_W=Parameter(xavier_init(L, P, rng), "dlinear.residual.W"),
            residual_b=Parameter(np.zeros(P), "dlinear.residual.b"),
        )

    def parameter_set(self) -> ParameterSet:
        params = ParameterSet()
        for param in (self.trend_W, self.trend_b, self.residual_W, self.residual_b):
            params.register(param)
        return params


def dlinear_forward(y_L: Array, params: DLinearParams, kernel: int) -> Tensor:
    parts = decompose(y_L, fit_kernel(kernel, y_L.shape[-1]))
    return linear_forward(parts.trend, params.trend_W, params.trend_b) + linear_forward(
        parts.residual, params.residual_W, params.residual_b
    )


def _labels(samples: list[ForecastSample], scale: float) -> tuple[Array, Array]:
    return np.stack([s.y_L for s in samples]) / scale, np.stack([s.y_P for s in samples]) / scale


def baseline_dlinear(config: TrainConfig, dataset: Dataset) -> tuple[DLinearParams, MetricReport]:
    """
    Train on the training split with plain squared error and score the test split.
    """
    check_windows(config, dataset)
    train_samples = dataset.split("train")
    test_samples = dataset.split("test")
    if not train_samples or not test_samples:
        raise ConfigException("the baseline needs non-empty train and test splits")

    rng = np.random.default_rng(config.seed)
    params = DLinearParams.init(config.L, config.P, rng)
    registry = params.parameter_set()
    optimizer = Adam(registry, lr=config.lr)
    scale = value_scale(train_samples) if config.normalize else 1.0
    y_L, y_P = _labels(train_samples, scale)

    batch_size = config.batch_nodes
    steps = max(1, len(train_samples) // batch_size)
    if config.max_steps is not None:
        steps = min(steps, config.max_steps)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train_samples))
        losses = []
        for step in range(steps):
            index = order[step * batch_size : (step + 1) * batch_size]
            optimizer.zero_grad()
            loss = squared_loss(dlinear_forward(y_L[index], params, config.kernel), y_P[index])
            loss.backward()
            optimizer.step()
            losses.append(loss.item())
        logger.info(f"baseline epoch {epoch}: train loss {np.mean(losses):.6f}")

    test_L, test_P = _labels(test_samples, scale)
    yhat = dlinear_forward(test_L, params, config.kernel).data * scale
    report = metric_report(yhat.ravel(), (test_P * scale).ravel(), len(test_samples))
    logger.info(f"baseline test wMAPE {report.wmape}")
    return params, report
