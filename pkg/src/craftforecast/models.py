from enum import Enum
import logging
from pathlib import Path
from typing import Self, Sequence

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from craftforecast.common import ConfigException

logger = logging.getLogger(__name__)

# (look-back, forecast) pairs: forecast lengths 7, 14, 30 with look-backs 30, 90, 180
WINDOW_PAIRS: tuple[tuple[int, int], ...] = ((30, 7), (90, 14), (180, 30))


class WorldConfig(BaseModel):
    """
    Synthetic hotel world and the dataset extracted from it. The defaults give the default
    world: 5 cities × 10 districts × 20 hotels over 240 days.
    """

    model_config = ConfigDict(extra="forbid")

    n_cities: int = Field(5, ge=1)
    districts_per_city: int = Field(10, ge=1)
    hotels_per_district: int = Field(20, ge=1)
    horizon: int = Field(240, ge=2)
    base_demand_min: float = Field(2.0, ge=0)
    base_demand_max: float = Field(12.0, ge=0)
    # weekend uplift, 0 gives a flat week
    weekly_amplitude: float = Field(0.5, ge=0, le=1)
    holiday_count: int = Field(6, ge=0)
    holiday_multiplier: float = Field(1.8, gt=0)
    # log-normal spread of district demand levels and the daily drift of district trends
    district_sigma: float = Field(0.3, ge=0)
    trend_sigma: float = Field(0.02, ge=0)
    noise_sigma: float = Field(0.15, ge=0)
    # booking lead times follow a mixture of two geometric distributions
    lead_short_p: float = Field(0.35, gt=0, le=1)
    lead_long_p: float = Field(0.08, gt=0, le=1)
    lead_mix: float = Field(0.6, ge=0, le=1)
    max_lead: int = Field(60, ge=0)
    cancellation_rate: float = Field(0.05, ge=0, lt=1)
    walkin_rate: float = Field(0.05, ge=0)
    # unconverted order-page views per expected booking
    browse_inflation: float = Field(1.5, ge=0)
    # target consistency between booking totals and labels, 1 adds no label noise
    rho_target: float = Field(0.8, gt=0, le=1)
    # district-wide multi-night group blocks of group_size rooms per hotel, booked at least
    # group_min_lead days ahead, started per district and day with probability of about group_rate
    group_rate: float = Field(0.02, ge=0, le=1)
    group_size: int = Field(5, ge=0)
    group_nights_min: int = Field(7, ge=1)
    group_nights_max: int = Field(21, ge=1)
    group_min_lead: int = Field(8, ge=1)
    L: int = Field(30, ge=1)
    P: int = Field(7, ge=1)
    origin_stride: int = Field(7, ge=1)
    split_ratios: tuple[float, float, float] = (0.7, 0.1, 0.2)

    @model_validator(mode="after")
    def validate_ranges(self) -> Self:
        if self.base_demand_min > self.base_demand_max:
            raise ValueError("base_demand_min must not exceed base_demand_max")
        if self.group_nights_min > self.group_nights_max:
            raise ValueError("group_nights_min must not exceed group_nights_max")
        if any(ratio < 0 for ratio in self.split_ratios) or abs(sum(self.split_ratios) - 1.0) > 1e-9:
            raise ValueError("split_ratios must be non-negative and sum to 1")
        if self.L + self.P >= self.horizon:
            raise ValueError("horizon too short for one look-back plus forecast window")
        return self

    @property
    def n_districts(self) -> int:
        return self.n_cities * self.districts_per_city

    @property
    def n_hotels(self) -> int:
        return self.n_districts * self.hotels_per_district


class VariantEnum(str, Enum):
    kpm_only = "kpm_only"
    itm = "itm"
    itm_etg = "itm_etg"
    full = "full"

    @property
    def use_itm(self) -> bool:
        return self is not VariantEnum.kpm_only

    @property
    def use_etg(self) -> bool:
        return self in (VariantEnum.itm_etg, VariantEnum.full)

    @property
    def demand_loss(self) -> bool:
        return self is VariantEnum.full


class LossWeights(BaseModel):
    model_config = ConfigDict(extra="forbid")

    alpha1: float = Field(500.0, ge=0, allow_inf_nan=False)
    alpha2: float = Field(2.0, ge=0, allow_inf_nan=False)
    alpha3: float = Field(0.1, ge=0, allow_inf_nan=False)
    beta: float = Field(1.0, ge=0, allow_inf_nan=False)


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True, use_enum_values=False)

    L: int = Field(30, ge=1)
    P: int = Field(7, ge=1)
    D: int = Field(128, ge=1)
    kernel: int = Field(15, ge=1)
    ridge_lambda: float = Field(0.1, gt=0, allow_inf_nan=False, alias="lambda")
    alpha1: float = Field(500.0, ge=0, allow_inf_nan=False)
    alpha2: float = Field(2.0, ge=0, allow_inf_nan=False)
    alpha3: float = Field(0.1, ge=0, allow_inf_nan=False)
    beta: float = Field(1.0, ge=0, allow_inf_nan=False)
    m: int = Field(15, ge=1)
    groups_per_batch: int = Field(16, ge=1)
    lr: float = Field(0.001, ge=0, allow_inf_nan=False)
    epochs: int = Field(2, ge=0)
    max_steps: int | None = Field(None, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    variant: VariantEnum = VariantEnum.full
    normalize: bool = True
    # every node divided by its own look-back level, forecasts scaled back before reconciliation
    node_scaling: bool = True
    data_dir: Path | None = None
    out_dir: Path | None = None
    allow_custom_windows: bool = False

    @field_validator("kernel")
    @classmethod
    def validate_kernel(cls, value: int) -> int:
        from craftforecast.modules.decomposition import odd_kernel

        try:
            return odd_kernel(value)
        except ConfigException as e:
            raise ValueError(e.args[0])

    @model_validator(mode="after")
    def validate_windows(self) -> Self:
        if not self.allow_custom_windows and (self.L, self.P) not in WINDOW_PAIRS:
            pairs = ", ".join(f"(L={L}, P={P})" for L, P in WINDOW_PAIRS)
            raise ValueError(f"window pair (L={self.L}, P={self.P}) not one of {pairs}")
        if self.L < self.P:
            raise ValueError(f"look-back L={self.L} must not be shorter than the forecast P={self.P}")
        return self

    @property
    def weights(self) -> LossWeights:
        return LossWeights(alpha1=self.alpha1, alpha2=self.alpha2, alpha3=self.alpha3, beta=self.beta)

    @property
    def batch_nodes(self) -> int:
        return self.groups_per_batch * (self.m + 1)


def horizon_preset(P: int) -> dict[str, int]:
    """
    Look-back and decomposition kernel tuned for each forecast length.
    """
    from craftforecast.modules.decomposition import default_kernel

    for L, pair_P in WINDOW_PAIRS:
        if pair_P == P:
            return {"L": L, "P": P, "kernel": default_kernel(P)}
    raise ConfigException(f"no preset for forecast length {P}")


class MetricReport(BaseModel):
    mae: float
    rmse: float
    wmape: float | None
    wmape_defined: bool = True
    iwr: float
    phdi: float
    loss_y: float = 0.0
    loss_be_k: float = 0.0
    loss_be_y: float = 0.0
    loss_recon: float = 0.0
    # mean |parent − Σ children| over evaluation groups and horizon days
    group_gap: float | None = None
    sample_count: int
    seconds_per_batch: float | None = None

    @classmethod
    def mean(cls, reports: Sequence["MetricReport"]) -> "MetricReport":
        if not reports:
            raise ConfigException("cannot average an empty list of reports")

        def avg(name: str) -> float | None:
            values = [getattr(report, name) for report in reports]
            if any(value is None for value in values):
                return None
            return sum(values) / len(values)

        wmape = avg("wmape")
        return cls(
            mae=avg("mae"),
            rmse=avg("rmse"),
            wmape=wmape,
            wmape_defined=wmape is not None,
            iwr=avg("iwr"),
            phdi=avg("phdi"),
            loss_y=avg("loss_y"),
            loss_be_k=avg("loss_be_k"),
            loss_be_y=avg("loss_be_y"),
            loss_recon=avg("loss_recon"),
            group_gap=avg("group_gap"),
            sample_count=sum(report.sample_count for report in reports),
            seconds_per_batch=avg("seconds_per_batch"),
        )


class EpochRecord(BaseModel):
    epoch: int
    train_loss: float
    val_wmape: float | None
    steps: int


class TrainHistory(BaseModel):
    epochs: list[EpochRecord] = []
    step_losses: list[float] = []


class AblationRow(BaseModel):
    variant: VariantEnum
    report: MetricReport
    seed_wmape: list[float | None]


class AblationTable(BaseModel):
    seeds: list[int]
    rows: list[AblationRow]


class PearsonCurve(BaseModel):
    p_max: int
    sample_count: int
    correlations: list[float]
