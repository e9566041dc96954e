"""
Checkpoint file layout:

    b"CRAFTCKP" | uint32 version | uint64 header length | header (JSON) | payload

The header holds the training config, the value scale and the name and shape of every
tensor, the payload is the tensors in header order as little-endian float64.
"""

from dataclasses import dataclass
import logging
from pathlib import Path
import struct

import numpy as np
import orjson

from craftforecast.common import DataException
from craftforecast.execution.model import CraftParams
from craftforecast.models import TrainConfig
from craftforecast.numeric.tensor import Array
from craftforecast.util import json

logger = logging.getLogger(__name__)

__all__ = ["Checkpoint", "save_checkpoint", "load_checkpoint", "MAGIC", "FORMAT_VERSION"]

MAGIC = b"CRAFTCKP"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sIQ")


@dataclass
class Checkpoint:
    config: TrainConfig
    scale: float
    tensors: dict[str, Array]

    def params(self) -> CraftParams:
        params = CraftParams.init(self.config, np.random.default_rng(0))
        params.parameter_set().load_state_dict(self.tensors)
        return params


def checkpoint_bytes(config: TrainConfig, scale: float, tensors: dict[str, Array]) -> bytes:
    header = json.dumpb(
        {
            "config": config.model_dump(mode="json", by_alias=True),
            "scale": scale,
            "tensors": [{"name": name, "shape": list(value.shape)} for name, value in tensors.items()],
        }
    )
    payload = b"".join(np.ascontiguousarray(value, dtype="<f8").tobytes() for value in tensors.values())
    return _PREFIX.pack(MAGIC, FORMAT_VERSION, len(header)) + header + payload


def save_checkpoint(path: Path, params: CraftParams, config: TrainConfig, scale: float) -> None:
    path.write_bytes(checkpoint_bytes(config, scale, params.parameter_set().state_dict()))
    logger.info(f"Wrote checkpoint {path}")


def load_checkpoint(path: Path) -> Checkpoint:
    if not path.exists():
        raise DataException(f"checkpoint {path} not found")
    data = path.read_bytes()
    if len(data) < _PREFIX.size:
        raise DataException(f"{path} is too short to be a checkpoint")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise DataException(f"{path} is not a CRAFT checkpoint")
    if version != FORMAT_VERSION:
        raise DataException(f"{path}: checkpoint format version {version}, this build reads version {FORMAT_VERSION}")
    start = _PREFIX.size
    try:
        header = json.loads(data[start : start + header_len])
    except orjson.JSONDecodeError as e:
        raise DataException(f"{path}: corrupt checkpoint header ({e})")
    config = TrainConfig.model_validate(header["config"])

    offset = start + header_len
    tensors: dict[str, Array] = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        end = offset + 8 * count
        if end > len(data):
            raise DataException(f"{path}: payload ends inside tensor {entry['name']}")
        tensors[entry["name"]] = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape).astype(np.float64)
        offset = end
    if offset != len(data):
        raise DataException(f"{path}: {len(data) - offset} trailing bytes after the payload")
    return Checkpoint(config=config, scale=float(header["scale"]), tensors=tensors)
