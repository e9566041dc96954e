from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

import numpy as np
from numpy.typing import ArrayLike, NDArray

from craftforecast.common import DataException, HotelNotFoundException
from craftforecast.numeric.tensor import Array

__all__ = ["BookingEvent", "EventLog", "EVENT_DTYPE", "early_to_cumulative", "booking_curve"]


EVENT_DTYPE = np.dtype(
    [
        ("hotel", "<i4"),
        ("checkin_day", "<i4"),
        ("booking_day", "<i4"),
        ("rooms", "<i4"),
        ("converted", "?"),
        ("cancelled", "?"),
    ]
)


@dataclass(frozen=True, slots=True)
class BookingEvent:
    """
    One aggregated booking-log row: `rooms` rooms for `checkin_day` booked (or, when not
    converted, only viewed on the order page) on `booking_day`.
    """

    hotel_id: str
    checkin_day: int
    booking_day: int
    rooms: int
    converted: bool = True
    cancelled: bool = False

    def __post_init__(self):
        if self.booking_day > self.checkin_day:
            raise DataException(f"booking on day {self.booking_day} after check-in day {self.checkin_day}")
        if self.rooms < 0:
            raise DataException(f"negative room count {self.rooms}")


class EventLog:
    """
    Columnar booking log, one structured numpy row per event. Hotels are stored by their
    position in `hotel_ids`.
    """

    def __init__(self, hotel_ids: list[str], rows: NDArray):
        self.hotel_ids = list(hotel_ids)
        self._position = {hotel_id: i for i, hotel_id in enumerate(self.hotel_ids)}
        self.rows = np.asarray(rows, dtype=EVENT_DTYPE)
        if np.any(self.rows["booking_day"] > self.rows["checkin_day"]):
            raise DataException("event log contains bookings after check-in")
        if np.any(self.rows["rooms"] < 0):
            raise DataException("event log contains negative room counts")

    @classmethod
    def from_events(cls, hotel_ids: list[str], events: Iterable[BookingEvent]) -> "EventLog":
        position = {hotel_id: i for i, hotel_id in enumerate(hotel_ids)}
        records = []
        for event in events:
            if event.hotel_id not in position:
                raise HotelNotFoundException(f"event for unknown hotel {event.hotel_id}")
            records.append(
                (
                    position[event.hotel_id],
                    event.checkin_day,
                    event.booking_day,
                    event.rooms,
                    event.converted,
                    event.cancelled,
                )
            )
        return cls(hotel_ids, np.array(records, dtype=EVENT_DTYPE))

    def __len__(self) -> int:
        return len(self.rows)

    def position(self, hotel_id: str) -> int:
        if hotel_id not in self._position:
            raise HotelNotFoundException(f"unknown hotel {hotel_id}")
        return self._position[hotel_id]

    def select(self, hotel_id: str, checkin_day: int) -> NDArray:
        rows = self.rows
        return rows[(rows["hotel"] == self.position(hotel_id)) & (rows["checkin_day"] == checkin_day)]

    def __iter__(self) -> Iterator[BookingEvent]:
        for row in self.rows:
            yield BookingEvent(
                hotel_id=self.hotel_ids[row["hotel"]],
                checkin_day=int(row["checkin_day"]),
                booking_day=int(row["booking_day"]),
                rooms=int(row["rooms"]),
                converted=bool(row["converted"]),
                cancelled=bool(row["cancelled"]),
            )

    def to_bytes(self) -> bytes:
        return self.rows.tobytes()


def early_to_cumulative(early: ArrayLike) -> Array:
    """
    Accumulate early-booking quantities into a booking curve, [2, 5, 11] -> [2, 7, 18].
    """
    values = np.asarray(early, dtype=np.float64)
    if np.any(values < 0):
        raise DataException("early booking quantities must be non-negative")
    return np.cumsum(values)


def booking_curve(events: EventLog, hotel_id: str, checkin_day: int) -> Callable[[int], float]:
    """
    Cumulative rooms booked for `checkin_day` on or before snapshot day s. Only converted
    bookings count, cancelled ones included since they were observed when made.
    """
    rows = events.select(hotel_id, checkin_day)
    rows = rows[rows["converted"]]
    order = np.argsort(rows["booking_day"], kind="stable")
    days = rows["booking_day"][order]
    totals = np.cumsum(rows["rooms"][order].astype(np.float64))

    def curve(s: int) -> float:
        idx = np.searchsorted(days, s, side="right")
        return float(totals[idx - 1]) if idx > 0 else 0.0

    return curve
