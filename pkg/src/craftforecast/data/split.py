from dataclasses import dataclass
import logging
from typing import Iterable

from craftforecast.common import ConfigException

logger = logging.getLogger(__name__)

__all__ = ["OriginSplit", "time_split", "SPLIT_NAMES"]

SPLIT_NAMES = ("train", "val", "test")


@dataclass(frozen=True)
class OriginSplit:
    train: list[int]
    val: list[int]
    test: list[int]

    def __getitem__(self, name: str) -> list[int]:
        if name not in SPLIT_NAMES:
            raise ConfigException(f"unknown split {name}, use one of {', '.join(SPLIT_NAMES)}")
        return getattr(self, name)


def time_split(origins: Iterable[int], ratios: tuple[float, float, float], L: int, P: int) -> OriginSplit:
    """
    Cut the forecast origins into train < val < test along time. The day range of the origins is
    divided by the ratios after reserving L + P days between consecutive non-empty splits, so no
    forecast window of an earlier split reaches the look-back of a later one.
    """
    if len(ratios) != 3 or any(ratio < 0 for ratio in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigException(f"split ratios must be three non-negative numbers summing to 1, got {ratios}")
    days = sorted(set(origins))
    if not days:
        raise ConfigException("no forecast origins to split")

    gap = L + P
    active = [ratio > 0 for ratio in ratios]
    first, last = days[0], days[-1]
    usable = (last - first + 1) - gap * (sum(active) - 1)
    if usable <= 0:
        raise ConfigException(f"origins span {last - first + 1} days, too few for {sum(active)} splits {gap} days apart")

    parts: list[list[int]] = []
    start = first
    remaining = usable
    last_active = max(i for i, flag in enumerate(active) if flag)
    for i, ratio in enumerate(ratios):
        if not active[i]:
            parts.append([])
            continue
        length = remaining if i == last_active else min(round(ratio * usable), remaining)
        parts.append([day for day in days if start <= day < start + length])
        remaining -= length
        start += length + gap

    for name, part, flag in zip(SPLIT_NAMES, parts, active):
        if flag and not part:
            raise ConfigException(f"split {name} has no origins, too few origins for the {gap}-day gap")
        if not flag:
            logger.warning(f"split {name} is empty")
    logger.info(f"split origins: {', '.join(f'{name}={len(part)}' for name, part in zip(SPLIT_NAMES, parts))}")
    return OriginSplit(*parts)
