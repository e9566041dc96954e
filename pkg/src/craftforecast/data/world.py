from dataclasses import dataclass
import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray

from craftforecast.common import ConfigException, HotelNotFoundException, WindowRangeException
from craftforecast.data.events import EVENT_DTYPE, EventLog
from craftforecast.models import WorldConfig
from craftforecast.numeric.tensor import Array

logger = logging.getLogger(__name__)

__all__ = ["Hotel", "HotelWorld", "generate_world", "group_blocks", "lead_time_pmf"]

# Monday..Sunday demand multipliers before scaling by a hotel's weekly amplitude
WEEKLY_PATTERN = np.array([0.8, 0.9, 1.0, 1.0, 1.2, 1.5, 1.3])


@dataclass(frozen=True)
class Hotel:
    hotel_id: str
    district_id: str
    city_id: str
    base_demand: float
    weekly_profile: tuple[float, ...]
    holidays: tuple[int, ...]


class HotelWorld:
    """
    Hotels with their district/city hierarchy, the booking log and realized check-ins.

    The booking log is indexed once into a lead-time tail table: `_tail[h, d, ℓ]` is the number
    of rooms for check-in day d booked at least ℓ days ahead, so the booking curve of (h, d)
    at snapshot day s is `_tail[h, d, max(d − s, 0)]`, and 0 beyond the longest lead.
    """

    def __init__(self, hotels: list[Hotel], events: EventLog, labels: ArrayLike, horizon: int):
        self.hotels = list(hotels)
        self.events = events
        self.horizon = horizon
        self.labels: Array = np.asarray(labels, dtype=np.float64)
        if self.labels.shape != (len(self.hotels), horizon):
            raise ConfigException(f"labels must have shape ({len(self.hotels)}, {horizon}), got {self.labels.shape}")
        if np.any(self.labels < 0):
            raise ConfigException("labels must be non-negative")
        if events.hotel_ids != [hotel.hotel_id for hotel in self.hotels]:
            raise ConfigException("event log and hotel list disagree on hotel order")
        self._position = {hotel.hotel_id: i for i, hotel in enumerate(self.hotels)}

        rows = events.rows
        inside = (rows["checkin_day"] >= 0) & (rows["checkin_day"] < horizon)
        booked = rows[inside & rows["converted"]]
        viewed = rows[inside & ~rows["converted"]]

        leads = booked["checkin_day"] - booked["booking_day"]
        self.max_lead = int(leads.max()) if len(leads) else 0
        by_lead = np.zeros((len(self.hotels), horizon, self.max_lead + 2), dtype=np.int64)
        np.add.at(by_lead, (booked["hotel"], booked["checkin_day"], leads), booked["rooms"])
        self._tail: NDArray[np.int64] = np.flip(np.cumsum(np.flip(by_lead, axis=2), axis=2), axis=2)

        self.page_views: Array = np.zeros((len(self.hotels), horizon))
        np.add.at(self.page_views, (viewed["hotel"], viewed["checkin_day"]), viewed["rooms"])

    def position(self, hotel_id: str) -> int:
        if hotel_id not in self._position:
            raise HotelNotFoundException(f"unknown hotel {hotel_id}")
        return self._position[hotel_id]

    def hotel(self, hotel_id: str) -> Hotel:
        return self.hotels[self.position(hotel_id)]

    def curve_values(self, hotel_id: str, checkin_days: ArrayLike, snapshot_days: ArrayLike) -> Array:
        """
        Booking-curve values for broadcastable arrays of check-in and snapshot days.
        """
        h = self.position(hotel_id)
        checkin, snapshot = np.broadcast_arrays(np.asarray(checkin_days), np.asarray(snapshot_days))
        if checkin.size and (checkin.min() < 0 or checkin.max() >= self.horizon):
            raise WindowRangeException(f"check-in days outside [0, {self.horizon})")
        lead = np.clip(checkin - snapshot, 0, self.max_lead + 1)
        return self._tail[h, checkin, lead].astype(np.float64)

    def final_totals(self, hotel_id: str) -> Array:
        return self._tail[self.position(hotel_id), :, 0].astype(np.float64)

    def districts(self) -> dict[str, list[str]]:
        result: dict[str, list[str]] = {}
        for hotel in self.hotels:
            result.setdefault(hotel.district_id, []).append(hotel.hotel_id)
        return result


def lead_time_pmf(config: WorldConfig) -> Array:
    """
    Mixture of a short and a long geometric lead-time distribution truncated at max_lead.
    """
    lead = np.arange(config.max_lead + 1)
    short = config.lead_short_p * (1 - config.lead_short_p) ** lead
    long = config.lead_long_p * (1 - config.lead_long_p) ** lead
    pmf = config.lead_mix * short + (1 - config.lead_mix) * long
    return pmf / pmf.sum()


def _holiday_factor(holidays: NDArray, horizon: int, multiplier: float) -> Array:
    factor = np.ones(horizon)
    for day in holidays:
        # the days around a holiday get half of the uplift
        for offset, share in ((-1, 0.5), (0, 1.0), (1, 0.5)):
            if 0 <= day + offset < horizon:
                factor[day + offset] = max(factor[day + offset], 1 + (multiplier - 1) * share)
    return factor


def group_blocks(config: WorldConfig, horizon: int, rng: np.random.Generator) -> tuple[NDArray, NDArray]:
    """
    Check-in and booking day of every night of the group blocks of one district, every hotel
    of the district holds `group_size` rooms of each block. Blocks start before day 0 too, so
    the first days of the horizon are covered like any other.
    """
    starts = np.arange(1 - config.group_nights_max, horizon)
    starts = np.repeat(starts, rng.poisson(config.group_rate, size=len(starts)))
    nights = rng.integers(config.group_nights_min, config.group_nights_max + 1, size=len(starts))
    leads = rng.integers(config.group_min_lead, max(config.group_min_lead, config.max_lead) + 1, size=len(starts))
    checkin = np.concatenate([start + np.arange(n) for start, n in zip(starts, nights)] or [np.empty(0, dtype=np.int64)])
    booking = np.repeat(starts - leads, nights)
    inside = (checkin >= 0) & (checkin < horizon)
    return checkin[inside], booking[inside]


def generate_world(config: WorldConfig, seed: int) -> HotelWorld:
    """
    Draw a hierarchical hotel world. Every random draw comes from one generator seeded with
    `seed`, in a fixed order, so the world is a pure function of (config, seed).
    """
    if not 0 <= seed < 2**64:
        raise ConfigException(f"seed must be an unsigned 64-bit integer, got {seed}")
    rng = np.random.default_rng(seed)
    horizon = config.horizon
    days = np.arange(horizon)
    pmf = lead_time_pmf(config)
    noise_share = (1.0 / config.rho_target**2 - 1.0) / 2.0

    hotels: list[Hotel] = []
    records: list[NDArray] = []
    labels = np.zeros((config.n_hotels, horizon))

    for c in range(config.n_cities):
        city_id = f"c{c:02d}"
        holidays = np.sort(rng.choice(horizon, size=min(config.holiday_count, horizon), replace=False))
        holiday = _holiday_factor(holidays, horizon, config.holiday_multiplier)
        for d in range(config.districts_per_city):
            district_id = f"{city_id}-d{d:02d}"
            level = rng.lognormal(0.0, config.district_sigma)
            drift = np.cumsum(rng.normal(0.0, config.trend_sigma, size=horizon))
            trend = np.exp(drift - drift.mean())
            block_checkin, block_booking = group_blocks(config, horizon, rng)
            block_rooms = np.bincount(block_checkin, minlength=horizon) * config.group_size
            for k in range(config.hotels_per_district):
                h = len(hotels)
                base = rng.uniform(config.base_demand_min, config.base_demand_max)
                weekly = 1 + config.weekly_amplitude * rng.uniform(0.5, 1.5) * (WEEKLY_PATTERN - 1)
                noise = rng.lognormal(-(config.noise_sigma**2) / 2, config.noise_sigma, size=horizon)
                intensity = base * weekly[days % 7] * holiday * level * trend * noise

                booked = rng.multinomial(rng.poisson(intensity), pmf)
                cancelled = rng.binomial(booked, config.cancellation_rate)
                viewed = rng.multinomial(rng.poisson(config.browse_inflation * intensity), pmf)
                walkins = rng.poisson(config.walkin_rate * intensity)
                label_noise = rng.poisson(noise_share * intensity) - rng.poisson(noise_share * intensity)

                kept = booked - cancelled
                # bookings made before the check-in day are committed demand, the label never drops below them
                floor = booked[:, 1:].sum(axis=1) + block_rooms
                labels[h] = np.maximum(np.maximum(kept.sum(axis=1) + block_rooms + walkins + label_noise, floor), 0)

                if config.group_size and len(block_checkin):
                    rows = np.empty(len(block_checkin), dtype=EVENT_DTYPE)
                    rows["hotel"] = h
                    rows["checkin_day"] = block_checkin
                    rows["booking_day"] = block_booking
                    rows["rooms"] = config.group_size
                    rows["converted"] = True
                    rows["cancelled"] = False
                    records.append(rows)

                for counts, converted, is_cancelled in ((kept, True, False), (cancelled, True, True), (viewed, False, False)):
                    checkin, lead = np.nonzero(counts)
                    rows = np.empty(len(checkin), dtype=EVENT_DTYPE)
                    rows["hotel"] = h
                    rows["checkin_day"] = checkin
                    rows["booking_day"] = checkin - lead
                    rows["rooms"] = counts[checkin, lead]
                    rows["converted"] = converted
                    rows["cancelled"] = is_cancelled
                    records.append(rows)

                hotels.append(
                    Hotel(
                        hotel_id=f"{district_id}-h{k:02d}",
                        district_id=district_id,
                        city_id=city_id,
                        base_demand=float(base),
                        weekly_profile=tuple(float(w) for w in weekly),
                        holidays=tuple(int(day) for day in holidays),
                    )
                )

    rows = np.concatenate(records) if records else np.empty(0, dtype=EVENT_DTYPE)
    events = EventLog([hotel.hotel_id for hotel in hotels], rows)
    logger.info(f"Generated {len(hotels)} hotels, {len(events)} booking log rows over {horizon} days")
    return HotelWorld(hotels, events, labels, horizon)
