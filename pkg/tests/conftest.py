import numpy as np
import pytest

from craftforecast.data.dataset import Dataset, build_dataset
from craftforecast.data.events import BookingEvent, EventLog
from craftforecast.data.world import Hotel, HotelWorld
from craftforecast.models import TrainConfig, WorldConfig


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow multi-seed training tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def hand_world(events: list[BookingEvent], horizon: int, n_hotels: int = 1, labels=None) -> HotelWorld:
    """
    A world with hotels h0, h1, ... in one district, labels default to the final booking totals.
    """
    hotels = [
        Hotel(f"h{i}", district_id="d0", city_id="c0", base_demand=1.0, weekly_profile=(1.0,) * 7, holidays=())
        for i in range(n_hotels)
    ]
    log = EventLog.from_events([hotel.hotel_id for hotel in hotels], events)
    if labels is None:
        world = HotelWorld(hotels, log, np.zeros((n_hotels, horizon)), horizon)
        labels = np.stack([world.final_totals(hotel.hotel_id) for hotel in hotels])
    return HotelWorld(hotels, log, labels, horizon)


@pytest.fixture
def hand_world_factory():
    return hand_world


@pytest.fixture(scope="session")
def micro_world_config() -> WorldConfig:
    return WorldConfig(
        n_cities=1,
        districts_per_city=2,
        hotels_per_district=4,
        horizon=60,
        max_lead=20,
        holiday_count=2,
        L=8,
        P=3,
        origin_stride=3,
        split_ratios=(0.6, 0.2, 0.2),
    )


@pytest.fixture(scope="session")
def micro_dataset(micro_world_config: WorldConfig) -> Dataset:
    return build_dataset(micro_world_config, seed=7)


@pytest.fixture
def micro_train_config() -> TrainConfig:
    return TrainConfig(
        L=8,
        P=3,
        D=4,
        kernel=5,
        m=3,
        groups_per_batch=2,
        epochs=1,
        max_steps=3,
        allow_custom_windows=True,
    )
