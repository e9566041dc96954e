import time

import pytest

from craftforecast.common import ConfigException, DataException, DatasetParseException
from craftforecast.data.dataset import SAMPLES_FILE, build_dataset, load_dataset_dir, read_dataset, save_dataset_dir, write_dataset
from craftforecast.models import WorldConfig


def test_dataset_dir_round_trip(micro_dataset, tmp_path):
    save_dataset_dir(micro_dataset, tmp_path / "data")
    loaded = load_dataset_dir(tmp_path / "data")
    assert loaded.seed == micro_dataset.seed
    assert loaded.world == micro_dataset.world
    assert loaded.splits == micro_dataset.splits
    assert loaded.samples == micro_dataset.samples
    assert (loaded.L, loaded.P) == (8, 3)


def test_split_samples(micro_dataset):
    for name in ("train", "val", "test"):
        origins = set(micro_dataset.splits[name])
        samples = micro_dataset.split(name)
        assert samples
        assert {s.origin for s in samples} == origins
        assert len(samples) == len(origins) * 8


def test_truncated_file(micro_dataset, tmp_path):
    path = tmp_path / SAMPLES_FILE
    assert write_dataset(micro_dataset.samples[:3], path) == 3
    content = path.read_bytes()
    path.write_bytes(content[: len(content) - 40])
    with pytest.raises(DatasetParseException) as info:
        read_dataset(path)
    assert info.value.line_nr == 3


def test_invalid_record(micro_dataset, tmp_path):
    path = tmp_path / SAMPLES_FILE
    write_dataset(micro_dataset.samples[:2], path)
    lines = path.read_bytes().splitlines()
    path.write_bytes(lines[0] + b"\n" + b'{"hotel_id": "x"}\n')
    with pytest.raises(DatasetParseException) as info:
        read_dataset(path)
    assert info.value.line_nr == 2


def test_missing_files(micro_dataset, tmp_path):
    with pytest.raises(DataException):
        load_dataset_dir(tmp_path / "nothing")
    save_dataset_dir(micro_dataset, tmp_path / "data")
    (tmp_path / "data" / SAMPLES_FILE).unlink()
    with pytest.raises(DataException):
        load_dataset_dir(tmp_path / "data")
    save_dataset_dir(micro_dataset, tmp_path / "other")
    (tmp_path / "other" / "world.yaml").unlink()
    with pytest.raises(DataException):
        load_dataset_dir(tmp_path / "other")


def test_unknown_world_key(micro_dataset, tmp_path):
    save_dataset_dir(micro_dataset, tmp_path / "data")
    world_file = tmp_path / "data" / "world.yaml"
    world_file.write_text(world_file.read_text() + "colour: blue\n")
    with pytest.raises(ConfigException):
        load_dataset_dir(tmp_path / "data")


@pytest.mark.slow
def test_ten_thousand_samples_round_trip(tmp_path):
    dataset = build_dataset(WorldConfig(n_cities=1, districts_per_city=1, hotels_per_district=10), seed=3)
    samples = (dataset.samples * (10_000 // len(dataset.samples) + 1))[:10_000]
    start = time.monotonic()
    assert write_dataset(samples, tmp_path / SAMPLES_FILE) == 10_000
    loaded = read_dataset(tmp_path / SAMPLES_FILE)
    assert time.monotonic() - start < 10.0
    assert len(loaded) == 10_000
    assert loaded[-1] == samples[-1]
