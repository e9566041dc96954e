"""
Dataset directories: `world.yaml` (the world config and seed), `samples.jsonl` (one forecast
sample per line) and `splits.json` (forecast origins per split).
"""

from dataclasses import dataclass
import logging
from pathlib import Path
from typing import Iterable

import numpy as np
import orjson
from pydantic import BaseModel, ConfigDict, ValidationError

from craftforecast.common import ConfigException, DataException, DatasetParseException, create_output_dir
from craftforecast.data.samples import CfbMatrix, ForecastSample, extract_samples, valid_origins
from craftforecast.data.split import SPLIT_NAMES, OriginSplit, time_split
from craftforecast.data.world import generate_world
from craftforecast.models import WorldConfig
from craftforecast.util import json, yaml

logger = logging.getLogger(__name__)

__all__ = ["Dataset", "build_dataset", "write_dataset", "read_dataset", "save_dataset_dir", "load_dataset_dir"]

SAMPLES_FILE = "samples.jsonl"
SPLITS_FILE = "splits.json"
WORLD_FILE = "world.yaml"


class CfbRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    origin: int
    truth: list[list[float]]


class SampleRecord(BaseModel):
    """
    On-disk form of a ForecastSample, masks are implied by the row-relative layout.
    """

    model_config = ConfigDict(extra="forbid")

    hotel_id: str
    district_id: str
    city_id: str
    origin: int
    L: int
    P: int
    y_L: list[float]
    y_P: list[float]
    c_L_series: list[float]
    c_Lmat: CfbRecord
    c_P: CfbRecord
    itm_rows: list[list[float]]
    y_lower: list[float]
    y_upper: list[float]
    reported: bool = True

    def to_sample(self) -> ForecastSample:
        return ForecastSample(
            hotel_id=self.hotel_id,
            district_id=self.district_id,
            city_id=self.city_id,
            origin=self.origin,
            L=self.L,
            P=self.P,
            y_L=np.array(self.y_L),
            y_P=np.array(self.y_P),
            c_L_series=np.array(self.c_L_series),
            c_Lmat=CfbMatrix(self.c_Lmat.origin, np.array(self.c_Lmat.truth)),
            c_P=CfbMatrix(self.c_P.origin, np.array(self.c_P.truth)),
            itm_rows=np.array(self.itm_rows),
            y_lower=np.array(self.y_lower),
            y_upper=np.array(self.y_upper),
            reported=self.reported,
        )


def _record_dict(sample: ForecastSample) -> dict:
    return {
        "hotel_id": sample.hotel_id,
        "district_id": sample.district_id,
        "city_id": sample.city_id,
        "origin": sample.origin,
        "L": sample.L,
        "P": sample.P,
        "y_L": sample.y_L,
        "y_P": sample.y_P,
        "c_L_series": sample.c_L_series,
        "c_Lmat": {"origin": sample.c_Lmat.origin, "truth": sample.c_Lmat.truth},
        "c_P": {"origin": sample.c_P.origin, "truth": sample.c_P.truth},
        "itm_rows": sample.itm_rows,
        "y_lower": sample.y_lower,
        "y_upper": sample.y_upper,
        "reported": sample.reported,
    }


def write_dataset(samples: Iterable[ForecastSample], path: Path) -> int:
    count = 0
    with open(path, "wb") as fp:
        for sample in samples:
            fp.write(json.dumpb(_record_dict(sample)))
            fp.write(b"\n")
            count += 1
    logger.info(f"Wrote {count} samples to {path}")
    return count


def read_dataset(path: Path) -> list[ForecastSample]:
    if not path.exists():
        raise DataException(f"dataset file {path} not found")
    samples = []
    with open(path, "rb") as fp:
        for line_nr, line in enumerate(fp, start=1):
            if not line.strip():
                continue
            try:
                record = SampleRecord.model_validate(json.loads(line))
                samples.append(record.to_sample())
            except orjson.JSONDecodeError as e:
                raise DatasetParseException(f"{path}:{line_nr}: malformed record ({e})", line_nr) from e
            except ValidationError as e:
                raise DatasetParseException(f"{path}:{line_nr}: invalid record ({e.error_count()} errors)", line_nr) from e
            except DataException as e:
                raise DatasetParseException(f"{path}:{line_nr}: {e.args[0]}", line_nr) from e
    return samples


class SplitRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    L: int
    P: int
    train: list[int]
    val: list[int]
    test: list[int]


class WorldRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int
    world: WorldConfig


@dataclass
class Dataset:
    seed: int
    world: WorldConfig
    splits: OriginSplit
    samples: list[ForecastSample]

    @property
    def L(self) -> int:
        return self.world.L

    @property
    def P(self) -> int:
        return self.world.P

    def split(self, name: str) -> list[ForecastSample]:
        origins = set(self.splits[name])
        return [sample for sample in self.samples if sample.origin in origins]


def save_dataset_dir(dataset: Dataset, out_dir: Path) -> None:
    create_output_dir(out_dir)
    with open(out_dir / WORLD_FILE, "w") as fp:
        yaml.dump(WorldRecord(seed=dataset.seed, world=dataset.world).model_dump(mode="json"), fp)
    splits = SplitRecord(L=dataset.L, P=dataset.P, **{name: dataset.splits[name] for name in SPLIT_NAMES})
    (out_dir / SPLITS_FILE).write_bytes(json.dumpb(splits, pretty=True))
    write_dataset(dataset.samples, out_dir / SAMPLES_FILE)


def load_dataset_dir(data_dir: Path) -> Dataset:
    if not data_dir.is_dir():
        raise DataException(f"dataset directory {data_dir} not found")
    world_path = data_dir / WORLD_FILE
    if not world_path.exists():
        raise DataException(f"{world_path} not found")
    try:
        world = WorldRecord.model_validate(yaml.load_mapping(world_path))
    except ValidationError as e:
        raise ConfigException(f"{world_path}: {e}")
    splits_path = data_dir / SPLITS_FILE
    if not splits_path.exists():
        raise DataException(f"{splits_path} not found")
    try:
        splits = SplitRecord.model_validate(json.loads(splits_path.read_bytes()))
    except (orjson.JSONDecodeError, ValidationError) as e:
        raise DataException(f"{splits_path}: could not read splits ({e})")
    samples = read_dataset(data_dir / SAMPLES_FILE)
    for sample in samples:
        if (sample.L, sample.P) != (splits.L, splits.P):
            raise DataException(f"sample {sample.hotel_id}@{sample.origin} has windows ({sample.L}, {sample.P})")
    logger.info(f"Loaded {len(samples)} samples from {data_dir}")
    return Dataset(
        seed=world.seed,
        world=world.world,
        splits=OriginSplit(train=splits.train, val=splits.val, test=splits.test),
        samples=samples,
    )


def build_dataset(config: WorldConfig, seed: int) -> Dataset:
    """
    Generate a world and extract the samples of every split origin.
    """
    world = generate_world(config, seed)
    origins = valid_origins(config.horizon, config.L, config.P, config.origin_stride)
    splits = time_split(origins, config.split_ratios, config.L, config.P)
    kept = sorted(splits.train + splits.val + splits.test)
    samples = list(extract_samples(world, kept, config.L, config.P))
    return Dataset(seed=seed, world=config, splits=splits, samples=samples)
