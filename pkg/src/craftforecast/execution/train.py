from dataclasses import dataclass
import logging
from pathlib import Path

import numpy as np

from craftforecast.common import ConfigException, NonFiniteException, create_output_dir
from craftforecast.data.batch import NodeBatch, value_scale
from craftforecast.data.dataset import Dataset
from craftforecast.data.hierarchy import GroupSampler
from craftforecast.execution.checkpoint import save_checkpoint
from craftforecast.execution.evaluate import evaluate
from craftforecast.execution.model import CraftParams, craft_forward, log_model
from craftforecast.models import EpochRecord, TrainConfig, TrainHistory
from craftforecast.numeric.optim import Adam
from craftforecast.util import json

logger = logging.getLogger(__name__)

__all__ = ["TrainResult", "train", "steps_per_epoch", "check_windows"]

CHECKPOINT_FILE = "model.ckpt"
HISTORY_FILE = "history.txt"


@dataclass
class TrainResult:
    params: CraftParams
    history: TrainHistory
    scale: float


def check_windows(config: TrainConfig, dataset: Dataset) -> None:
    if (config.L, config.P) != (dataset.L, dataset.P):
        raise ConfigException(
            f"training windows (L={config.L}, P={config.P}) differ from the dataset's (L={dataset.L}, P={dataset.P})"
        )


def steps_per_epoch(child_count: int, config: TrainConfig) -> int:
    """
    One epoch visits as many children as the split holds.
    """
    steps = max(1, child_count // (config.groups_per_batch * config.m))
    if config.max_steps is not None:
        steps = min(steps, config.max_steps)
    return steps


def train(
    config: TrainConfig, dataset: Dataset, out_dir: Path | None = None, log: logging.Logger = logger
) -> TrainResult:
    """
    Adam over batches of hierarchically sampled groups. When the loss or a gradient turns
    non-finite the parameters from before that step are written to the run directory and
    the run stops.
    """
    check_windows(config, dataset)
    train_samples = dataset.split("train")
    if not train_samples:
        raise ConfigException("the training split is empty")
    val_samples = dataset.split("val")

    rng = np.random.default_rng(config.seed)
    params = CraftParams.init(config, rng)
    registry = log_model(params, config)
    optimizer = Adam(registry, lr=config.lr)
    scale = value_scale(train_samples) if config.normalize else 1.0
    sampler = GroupSampler(train_samples, config.m)
    steps = steps_per_epoch(sampler.child_count, config)
    log.info(f"training {config.epochs} epochs of {steps} steps, {config.batch_nodes} nodes per batch, scale {scale:.4f}")

    history = TrainHistory()
    for epoch in range(1, config.epochs + 1):
        epoch_losses = []
        for step in range(steps):
            groups = [sampler.sample(rng) for _ in range(config.groups_per_batch)]
            batch = NodeBatch.from_groups(groups, config.kernel, scale, config.node_scaling)
            optimizer.zero_grad()
            out = craft_forward(batch, params, config)
            loss = out.total.item()
            if np.isfinite(loss):
                out.total.backward()
            if not np.isfinite(loss) or not all(np.all(np.isfinite(param.grad)) for param in registry):
                if out_dir is not None:
                    save_checkpoint(create_output_dir(out_dir) / CHECKPOINT_FILE, params, config, scale)
                raise NonFiniteException(f"non-finite loss or gradient at epoch {epoch} step {step + 1}")
            optimizer.step()
            epoch_losses.append(loss)
            history.step_losses.append(loss)
            log.debug(
                f"epoch {epoch} step {step + 1}: total={loss:.6f} "
                + " ".join(f"{name}={value:.6f}" for name, value in out.parts().items())
            )

        val_wmape = None
        if val_samples:
            report, _ = evaluate(params, config, val_samples, scale)
            val_wmape = report.wmape
        record = EpochRecord(epoch=epoch, train_loss=float(np.mean(epoch_losses)), val_wmape=val_wmape, steps=steps)
        history.epochs.append(record)
        log.info(f"epoch {epoch}: train loss {record.train_loss:.6f}, val wMAPE {val_wmape}")

    if out_dir is not None:
        create_output_dir(out_dir)
        save_checkpoint(out_dir / CHECKPOINT_FILE, params, config, scale)
        (out_dir / HISTORY_FILE).write_bytes(json.dumpb(history, pretty=True))
    return TrainResult(params=params, history=history, scale=scale)
