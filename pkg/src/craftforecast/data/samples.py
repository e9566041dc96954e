from dataclasses import dataclass, field, replace
import logging
from typing import Iterable, Iterator

import numpy as np
from numpy.typing import ArrayLike

from craftforecast.common import DataException, WindowRangeException
from craftforecast.data.world import HotelWorld
from craftforecast.numeric.tensor import Array

logger = logging.getLogger(__name__)

__all__ = [
    "CfbMatrix",
    "ForecastSample",
    "cfb_matrix",
    "build_sample",
    "extract_samples",
    "valid_origins",
    "lower_mask",
    "itm_observed_mask",
]


def lower_mask(size: int) -> Array:
    """
    Observability at the origin of a row-relative CFB matrix: entry (i, j) is known iff j ≤ i.
    """
    return np.tri(size, dtype=bool)


def itm_observed_mask(L: int, P: int) -> Array:
    """
    Observed columns of the P × (L+P) ITM rows: row i is known up to column L + i.
    """
    i = np.arange(P)[:, None]
    j = np.arange(L + P)[None, :]
    return j <= L + i


@dataclass(frozen=True)
class CfbMatrix:
    """
    Row i is the booking curve of check-in day origin+1+i, column j its snapshot at day
    origin + (j − i). `values` keeps only what is known at the origin.
    """

    origin: int
    truth: Array
    values: Array = field(init=False)
    mask: Array = field(init=False)

    def __post_init__(self):
        truth = np.asarray(self.truth, dtype=np.float64)
        if truth.ndim != 2 or truth.shape[0] != truth.shape[1]:
            raise DataException(f"CFB matrix must be square, got shape {truth.shape}")
        if np.any(truth < 0):
            raise DataException("CFB matrix has negative booking counts")
        if np.any(np.diff(truth, axis=1) < 0):
            raise DataException("CFB matrix rows must be nondecreasing booking curves")
        mask = lower_mask(truth.shape[0])
        object.__setattr__(self, "truth", truth)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "values", np.where(mask, truth, 0.0))

    @property
    def size(self) -> int:
        return self.truth.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CfbMatrix):
            return NotImplemented
        return self.origin == other.origin and np.array_equal(self.truth, other.truth)


def cfb_matrix(world: HotelWorld, hotel_id: str, origin: int, size: int) -> CfbMatrix:
    if size < 1:
        raise WindowRangeException(f"CFB matrix size must be positive, got {size}")
    if origin + 1 < 0 or origin + size >= world.horizon:
        raise WindowRangeException(
            f"check-in days {origin + 1}..{origin + size} outside the world horizon 0..{world.horizon - 1}"
        )
    i = np.arange(size)[:, None]
    j = np.arange(size)[None, :]
    truth = world.curve_values(hotel_id, origin + 1 + i, origin + (j - i))
    return CfbMatrix(origin, truth)


@dataclass(frozen=True)
class ForecastSample:
    hotel_id: str
    district_id: str
    city_id: str
    origin: int
    L: int
    P: int
    y_L: Array
    y_P: Array
    c_L_series: Array
    c_Lmat: CfbMatrix
    c_P: CfbMatrix
    itm_rows: Array
    y_lower: Array
    y_upper: Array
    # False for padding duplicates and virtual parents, kept out of hotel-level metrics
    reported: bool = True

    def __post_init__(self):
        expected = {
            "y_L": (self.L,),
            "y_P": (self.P,),
            "c_L_series": (self.L,),
            "itm_rows": (self.P, self.L + self.P),
            "y_lower": (self.P,),
            "y_upper": (self.P,),
        }
        for name, shape in expected.items():
            value = np.asarray(getattr(self, name), dtype=np.float64)
            if value.shape != shape:
                raise DataException(f"sample {self.hotel_id}@{self.origin}: {name} has shape {value.shape}, expected {shape}")
            if np.any(value < 0):
                raise DataException(f"sample {self.hotel_id}@{self.origin}: {name} has negative entries")
            object.__setattr__(self, name, value)
        if self.c_Lmat.size != self.P or self.c_P.size != self.P:
            raise DataException(f"sample {self.hotel_id}@{self.origin}: CFB matrices must be {self.P}x{self.P}")
        if np.any(self.y_lower > self.y_P) or np.any(self.y_P > self.y_upper):
            raise DataException(f"sample {self.hotel_id}@{self.origin}: demand bounds do not enclose the label")

    @property
    def itm_mask(self) -> Array:
        return itm_observed_mask(self.L, self.P)

    @property
    def weight(self) -> float:
        """
        Selection weight for hierarchical sampling.
        """
        return float(self.y_L.mean()) + 1e-6

    def scaled(self, factor: float) -> "ForecastSample":
        """
        Every additive quantity multiplied by factor.
        """
        return replace(
            self,
            y_L=self.y_L * factor,
            y_P=self.y_P * factor,
            c_L_series=self.c_L_series * factor,
            c_Lmat=CfbMatrix(self.c_Lmat.origin, self.c_Lmat.truth * factor),
            c_P=CfbMatrix(self.c_P.origin, self.c_P.truth * factor),
            itm_rows=self.itm_rows * factor,
            y_lower=self.y_lower * factor,
            y_upper=self.y_upper * factor,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ForecastSample):
            return NotImplemented
        arrays = ("y_L", "y_P", "c_L_series", "itm_rows", "y_lower", "y_upper")
        return (
            (self.hotel_id, self.district_id, self.city_id, self.origin, self.L, self.P, self.reported)
            == (other.hotel_id, other.district_id, other.city_id, other.origin, other.L, other.P, other.reported)
            and all(np.array_equal(getattr(self, name), getattr(other, name)) for name in arrays)
            and self.c_Lmat == other.c_Lmat
            and self.c_P == other.c_P
        )


def _check_window(world: HotelWorld, origin: int, L: int, P: int) -> None:
    first = min(origin - L + 1, origin - P + 1)
    if first < 0 or origin + P > world.horizon - 1:
        raise WindowRangeException(
            f"windows around origin {origin} (L={L}, P={P}) leave the world horizon 0..{world.horizon - 1}"
        )


def build_sample(world: HotelWorld, hotel_id: str, origin: int, L: int, P: int) -> ForecastSample:
    _check_window(world, origin, L, P)
    h = world.position(hotel_id)
    hotel = world.hotels[h]
    t = origin
    y_P = world.labels[h, t + 1 : t + P + 1]
    c_P = cfb_matrix(world, hotel_id, t, P)

    i = np.arange(P)[:, None]
    j = np.arange(L + P)[None, :]
    itm_rows = world.curve_values(hotel_id, t + 1 + i, t - L + (j - i))

    return ForecastSample(
        hotel_id=hotel_id,
        district_id=hotel.district_id,
        city_id=hotel.city_id,
        origin=t,
        L=L,
        P=P,
        y_L=world.labels[h, t - L + 1 : t + 1],
        y_P=y_P,
        c_L_series=world.final_totals(hotel_id)[t - L + 1 : t + 1],
        c_Lmat=cfb_matrix(world, hotel_id, t - P, P),
        c_P=c_P,
        itm_rows=itm_rows,
        y_lower=np.diag(c_P.truth).copy(),
        y_upper=y_P + world.page_views[h, t + 1 : t + P + 1],
    )


def valid_origins(horizon: int, L: int, P: int, stride: int = 1) -> list[int]:
    """
    Forecast origins whose look-back and forecast windows fit in the horizon, every stride days.
    """
    first = max(L, P) - 1
    last = horizon - P - 1
    return list(range(first, last + 1, stride))


def extract_samples(world: HotelWorld, origins: Iterable[int], L: int, P: int) -> Iterator[ForecastSample]:
    for origin in origins:
        for hotel in world.hotels:
            yield build_sample(world, hotel.hotel_id, origin, L, P)


def stack(samples: list[ForecastSample], name: str) -> Array:
    """
    Stack one field of every sample along a new leading axis.
    """
    if name in ("c_Lmat", "c_P"):
        return np.stack([getattr(sample, name).truth for sample in samples])
    return np.stack([np.asarray(getattr(sample, name)) for sample in samples])


def sum_field(values: Iterable[ArrayLike]) -> Array:
    return np.sum(np.stack([np.asarray(value, dtype=np.float64) for value in values]), axis=0)
