from dataclasses import dataclass, replace
import logging
from typing import Iterable

import numpy as np
from numpy.typing import ArrayLike

from craftforecast.common import DataException, DistrictTooSmallException
from craftforecast.data.samples import CfbMatrix, ForecastSample, sum_field

logger = logging.getLogger(__name__)

__all__ = [
    "HierGroup",
    "GroupSampler",
    "make_virtual_parent",
    "weighted_selection",
    "hierarchical_sample",
    "eval_groups",
    "pool_by_district",
]

type PoolKey = tuple[str, int]


@dataclass(frozen=True)
class HierGroup:
    children: list[ForecastSample]
    parent: ForecastSample

    def __post_init__(self):
        districts = {child.district_id for child in self.children}
        if len(districts) != 1:
            raise DataException(f"group children span several districts: {sorted(districts)}")

    @property
    def m(self) -> int:
        return len(self.children)

    @property
    def nodes(self) -> list[ForecastSample]:
        """
        Children first, parent last.
        """
        return [*self.children, self.parent]


def make_virtual_parent(children: list[ForecastSample]) -> ForecastSample:
    if not children:
        raise DataException("a virtual parent needs at least one child")
    first = children[0]
    for child in children[1:]:
        if (child.origin, child.L, child.P) != (first.origin, first.L, first.P):
            raise DataException("children of one group must share origin and window lengths")

    def total(name: str):
        return sum_field(getattr(child, name) for child in children)

    return ForecastSample(
        hotel_id=f"{first.district_id}/parent",
        district_id=first.district_id,
        city_id=first.city_id,
        origin=first.origin,
        L=first.L,
        P=first.P,
        y_L=total("y_L"),
        y_P=total("y_P"),
        c_L_series=total("c_L_series"),
        c_Lmat=CfbMatrix(first.c_Lmat.origin, sum_field(child.c_Lmat.truth for child in children)),
        c_P=CfbMatrix(first.c_P.origin, sum_field(child.c_P.truth for child in children)),
        itm_rows=total("itm_rows"),
        y_lower=total("y_lower"),
        y_upper=total("y_upper"),
        reported=False,
    )


def weighted_selection(weights: ArrayLike, m: int, rng: np.random.Generator) -> list[int]:
    """
    m distinct indices drawn one after another with probability proportional to weight.
    """
    w = np.asarray(weights, dtype=np.float64)
    if m > len(w):
        raise DistrictTooSmallException(f"cannot select {m} of {len(w)} candidates")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise DataException("selection weights must be positive and finite")
    return [int(i) for i in rng.choice(len(w), size=m, replace=False, p=w / w.sum())]


def hierarchical_sample(candidates: list[ForecastSample], m: int, rng: np.random.Generator) -> HierGroup:
    """
    Sample m hotels of one district at one origin, busier hotels being likelier to be picked,
    and add their virtual parent.
    """
    if len(candidates) < m:
        district = candidates[0].district_id if candidates else "?"
        raise DistrictTooSmallException(f"district {district} has {len(candidates)} hotels, {m} needed")
    chosen = weighted_selection([sample.weight for sample in candidates], m, rng)
    children = [candidates[i] for i in chosen]
    return HierGroup(children=children, parent=make_virtual_parent(children))


def pool_by_district(samples: Iterable[ForecastSample]) -> dict[PoolKey, list[ForecastSample]]:
    pools: dict[PoolKey, list[ForecastSample]] = {}
    for sample in samples:
        pools.setdefault((sample.district_id, sample.origin), []).append(sample)
    for pool in pools.values():
        pool.sort(key=lambda sample: sample.hotel_id)
    return pools


class GroupSampler:
    """
    Draws training groups: a (district, origin) pool uniformly at random, then m children from it.
    Pools that are too small are skipped and another one is drawn.
    """

    def __init__(self, samples: Iterable[ForecastSample], m: int, max_attempts: int = 100):
        self.m = m
        self.max_attempts = max_attempts
        pools = pool_by_district(samples)
        self.keys: list[PoolKey] = sorted(pools)
        self.pools = pools
        self.child_count = sum(len(pool) for pool in pools.values())
        if not any(len(pool) >= m for pool in pools.values()):
            raise DistrictTooSmallException(f"no district has the {m} hotels a group needs")

    def sample(self, rng: np.random.Generator) -> HierGroup:
        for _ in range(self.max_attempts):
            key = self.keys[int(rng.integers(len(self.keys)))]
            try:
                return hierarchical_sample(self.pools[key], self.m, rng)
            except DistrictTooSmallException as e:
                logger.debug(f"resampling: {e.args[0]}")
        raise DistrictTooSmallException(f"no eligible district found in {self.max_attempts} attempts")


def eval_groups(samples: Iterable[ForecastSample], m: int, seed: int) -> list[HierGroup]:
    """
    Deterministic evaluation groups: every (district, origin) pool is shuffled with a seeded
    generator and cut into groups of m. The last group is filled up with repeated hotels that
    are flagged as not reported, a pool smaller than m becomes one smaller group.
    """
    rng = np.random.default_rng(seed)
    pools = pool_by_district(samples)
    groups: list[HierGroup] = []
    for key in sorted(pools):
        pool = pools[key]
        order = rng.permutation(len(pool))
        shuffled = [pool[i] for i in order]
        for start in range(0, len(shuffled), m):
            children = shuffled[start : start + m]
            if len(children) < m and len(shuffled) >= m:
                fill = [replace(sample, reported=False) for sample in shuffled[: m - len(children)]]
                children = children + fill
            groups.append(HierGroup(children=children, parent=make_virtual_parent(children)))
    return groups
