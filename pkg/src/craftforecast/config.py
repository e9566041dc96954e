import logging
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ValidationError

from craftforecast.common import ConfigException
from craftforecast.models import TrainConfig, WorldConfig
from craftforecast.util import yaml

logger = logging.getLogger(__name__)

__all__ = ["load_world_config", "load_train_config", "validate_config", "config_path"]


def validate_config[M: BaseModel](model: type[M], values: dict[str, Any], source: str) -> M:
    try:
        return model.model_validate(values)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(str(part) for part in error['loc']) or '-'}: {error['msg']}" for error in e.errors())
        raise ConfigException(f"config {source}: {problems}")


def load_world_config(path: Path | None) -> WorldConfig:
    """
    Read a world config, a missing path gives the default world.
    """
    if path is None:
        return WorldConfig()
    logger.info(f"Reading {path}")
    return validate_config(WorldConfig, yaml.load_mapping(path), str(path))


def load_train_config(path: Path | None, **overrides: Any) -> TrainConfig:
    """
    Read a training config and apply command-line overrides, None values are ignored.
    """
    values = yaml.load_mapping(path) if path is not None else {}
    if path is not None:
        logger.info(f"Reading {path}")
    values.update({key: value for key, value in overrides.items() if value is not None})
    return validate_config(TrainConfig, values, str(path) if path else "<defaults>")


def config_path(config: TrainConfig, field: str, flag: str) -> Path:
    """
    A directory from the training config, where the command-line flag has already been merged in.
    """
    value = getattr(config, field)
    if value is None:
        raise ConfigException(f"no {flag} given and the training config sets no {field}")
    return value
