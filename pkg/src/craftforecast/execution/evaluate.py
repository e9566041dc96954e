from dataclasses import dataclass
import logging
import time
from typing import Sequence

import numpy as np

from craftforecast.common import ConfigException
from craftforecast.data.batch import NodeBatch
from craftforecast.data.hierarchy import HierGroup, eval_groups
from craftforecast.data.samples import ForecastSample
from craftforecast.execution.model import CraftParams, craft_forward
from craftforecast.metrics import eval_point_metrics, iwr, phdi
from craftforecast.models import MetricReport, TrainConfig
from craftforecast.numeric.tensor import Array

logger = logging.getLogger(__name__)

__all__ = ["NodePrediction", "evaluate", "predict_groups", "metric_report", "eval_batches"]


@dataclass
class NodePrediction:
    sample: ForecastSample
    y_hat: Array
    y_kpm: Array
    y_itm: Array | None
    is_parent: bool


def eval_batches(groups: list[HierGroup], groups_per_batch: int) -> list[list[HierGroup]]:
    """
    Batches of equally sized groups, in a fixed order.
    """
    by_size: dict[int, list[HierGroup]] = {}
    for group in groups:
        by_size.setdefault(group.m, []).append(group)
    batches = []
    for size in sorted(by_size, reverse=True):
        bucket = by_size[size]
        batches.extend(bucket[i : i + groups_per_batch] for i in range(0, len(bucket), groups_per_batch))
    return batches


def metric_report(
    yhat: Array,
    y: Array,
    sample_count: int | None = None,
    loss_parts: dict[str, float] | None = None,
    **extra: float | None,
) -> MetricReport:
    mae, rmse, wmape = eval_point_metrics(yhat, y)
    return MetricReport(
        mae=mae,
        rmse=rmse,
        wmape=wmape,
        wmape_defined=wmape is not None,
        iwr=iwr(yhat, y),
        phdi=phdi(yhat, y),
        sample_count=np.size(y) if sample_count is None else sample_count,
        **(loss_parts or {}),
        **extra,
    )


def predict_groups(
    params: CraftParams, config: TrainConfig, groups: list[HierGroup], scale: float
) -> tuple[list[NodePrediction], dict[str, float], float | None]:
    """
    Forward every group and return per-node forecasts in booking units, the mean loss parts and
    the mean wall time per batch.
    """
    predictions: list[NodePrediction] = []
    parts: dict[str, list[float]] = {}
    durations = []
    for groups_batch in eval_batches(groups, config.groups_per_batch):
        start = time.perf_counter()
        batch = NodeBatch.from_groups(groups_batch, config.kernel, scale, config.node_scaling)
        out = craft_forward(batch, params, config)
        durations.append(time.perf_counter() - start)
        for name, value in out.parts().items():
            parts.setdefault(name, []).append(value)
        factor = scale * batch.levels
        for i, node in enumerate(batch.nodes()):
            predictions.append(
                NodePrediction(
                    sample=node,
                    y_hat=out.y_hat.data[i] * factor[i],
                    y_kpm=out.y_kpm[i] * factor[i],
                    y_itm=out.y_itm[i] * factor[i] if out.y_itm is not None else None,
                    is_parent=bool(batch.is_parent[i]),
                )
            )
    mean_parts = {name: float(np.mean(values)) for name, values in parts.items()}
    seconds = float(np.mean(durations)) if durations else None
    return predictions, mean_parts, seconds


def group_gap(predictions: Sequence[NodePrediction]) -> float | None:
    """
    Mean |ŷ(parent) − Σ ŷ(children)| over groups and forecast days.
    """
    gaps = []
    children: list[Array] = []
    for prediction in predictions:
        if prediction.is_parent:
            if children:
                gaps.append(np.abs(prediction.y_hat - np.sum(children, axis=0)))
            children = []
        else:
            children.append(prediction.y_hat)
    return float(np.mean(gaps)) if gaps else None


def evaluate(
    params: CraftParams, config: TrainConfig, samples: list[ForecastSample], scale: float, seed: int | None = None
) -> tuple[MetricReport, list[NodePrediction]]:
    """
    Score hotel-level forecasts of the given samples. Groups are cut deterministically per
    district, parents and fill-up duplicates are left out of the metrics.
    """
    if not samples:
        raise ConfigException("cannot evaluate an empty split")
    groups = eval_groups(samples, config.m, config.seed if seed is None else seed)
    predictions, parts, seconds = predict_groups(params, config, groups, scale)
    scored = [p for p in predictions if not p.is_parent and p.sample.reported]
    yhat = np.concatenate([p.y_hat for p in scored])
    y = np.concatenate([p.sample.y_P for p in scored])
    report = metric_report(yhat, y, len(scored), parts, group_gap=group_gap(predictions), seconds_per_batch=seconds)
    logger.info(
        f"evaluated {len(scored)} samples: mae={report.mae:.4f} rmse={report.rmse:.4f} "
        f"wmape={report.wmape if report.wmape is not None else 'undefined'}"
    )
    return report, predictions
