from dataclasses import dataclass
import logging

import numpy as np

from craftforecast.data.batch import NodeBatch
from craftforecast.losses import demand_loss, squared_loss, total_loss
from craftforecast.models import TrainConfig
from craftforecast.modules.etg import EtgParams, GroupBatch, etg_forward, loss_recon
from craftforecast.modules.itm import (
    ItmParams,
    adapt_forward,
    complete_forward,
    itm_decode,
    itm_decode_cfb,
    itm_encode,
    loss_be_y,
)
from craftforecast.modules.kpm import KpmParams, kpm_forward
from craftforecast.numeric.ops import linear_forward
from craftforecast.numeric.optim import xavier_init
from craftforecast.numeric.params import ParameterSet
from craftforecast.numeric.tensor import Array, Parameter, Tensor

logger = logging.getLogger(__name__)

__all__ = ["CraftParams", "CraftOutput", "craft_forward"]


@dataclass
class CraftParams:
    kpm: KpmParams
    itm: ItmParams
    etg: EtgParams
    res_y_W: Parameter
    res_y_b: Parameter
    res_c_W: Parameter
    res_c_b: Parameter

    @classmethod
    def init(cls, config: TrainConfig, rng: np.random.Generator) -> "CraftParams":
        L, P, D = config.L, config.P, config.D
        return cls(
            kpm=KpmParams.init(P, D, rng),
            itm=ItmParams.init(L, P, D, rng),
            etg=EtgParams.init(D, rng),
            res_y_W=Parameter(xavier_init(L, P, rng), "residual.y.W"),
            res_y_b=Parameter(np.zeros(P), "residual.y.b"),
            res_c_W=Parameter(xavier_init(P, P, rng), "residual.c.W"),
            res_c_b=Parameter(np.zeros(P), "residual.c.b"),
        )

    def parameter_set(self) -> ParameterSet:
        params = ParameterSet()
        self.kpm.register(params)
        self.itm.register(params)
        self.etg.register(params)
        for param in (self.res_y_W, self.res_y_b, self.res_c_W, self.res_c_b):
            params.register(param)
        return params


@dataclass
class CraftOutput:
    """
    Forward results for every node of a batch, in the batch's normalized units (multiply by
    `levels` and `scale` for bookings). `y_kpm` and `y_itm` are the forecasts after the Koopman
    stage and after internal trend mining, before the guide.
    """

    y_hat: Tensor
    y_trend: Tensor
    y_residual: Tensor
    c_hat_TP: Tensor | None
    c_trend: Tensor | None
    c_residual: Tensor | None
    y_kpm: Array
    y_itm: Array | None
    L_y: Tensor
    L_be_k: Tensor
    L_be_y: Tensor | None
    L_recon: Tensor
    total: Tensor

    def parts(self) -> dict[str, float]:
        return {
            "loss_y": self.L_y.item(),
            "loss_be_k": self.L_be_k.item(),
            "loss_be_y": self.L_be_y.item() if self.L_be_y is not None else 0.0,
            "loss_recon": self.L_recon.item(),
        }


def craft_forward(batch: NodeBatch, params: CraftParams, config: TrainConfig) -> CraftOutput:
    variant = config.variant
    P = batch.P
    weights = config.weights
    if not variant.use_etg:
        weights = weights.model_copy(update={"alpha3": 0.0})

    kpm = kpm_forward(batch, params.kpm, config.ridge_lambda)
    y_residual = linear_forward(batch.y_L_residual, params.res_y_W, params.res_y_b)
    y_kpm = kpm.y_init_T + y_residual

    c_hat_TP = c_hat_TP_T = c_residual = None
    L_be_y = None
    y_itm = None
    if variant.use_itm:
        zc_rows, zy = itm_encode(batch, kpm.y_init_T, params.itm)
        c_hat_TP_T = itm_decode_cfb(complete_forward(zc_rows, params.itm), params.itm, P)
        c_residual = linear_forward(batch.c_L_residual, params.res_c_W, params.res_c_b)
        c_hat_TP = c_hat_TP_T + c_residual
        L_be_y = loss_be_y(c_hat_TP, batch.c_P_truth)

        zy_tilde = adapt_forward(complete_forward(zy, params.itm), params.itm)
        y_itm = (itm_decode(zy_tilde, params.itm, P) + y_residual).data
        if variant.use_etg:
            groups = GroupBatch.from_nodes(zy_tilde, batch.g, batch.m)
            zy_tilde = groups.flat(etg_forward(groups, params.etg))
        y_trend = itm_decode(zy_tilde, params.itm, P)
    else:
        y_trend = kpm.y_init_T

    y_hat = y_trend + y_residual
    if variant.demand_loss:
        L_y = demand_loss(y_hat, batch.y_P, batch.y_lower, batch.y_upper, config.beta)
    else:
        L_y = squared_loss(y_hat, batch.y_P)
    # parents and children compared in common units
    L_recon = loss_recon((y_hat * batch.levels[:, None]).reshape(batch.g, batch.m + 1, P))
    total = total_loss(L_y, kpm.loss_be_k, L_be_y if L_be_y is not None else 0.0, L_recon, weights)
    return CraftOutput(
        y_hat=y_hat,
        y_trend=y_trend,
        y_residual=y_residual,
        c_hat_TP=c_hat_TP,
        c_trend=c_hat_TP_T,
        c_residual=c_residual,
        y_kpm=y_kpm.data,
        y_itm=y_itm,
        L_y=L_y,
        L_be_k=kpm.loss_be_k,
        L_be_y=L_be_y,
        L_recon=L_recon,
        total=total,
    )


def log_model(params: CraftParams, config: TrainConfig) -> ParameterSet:
    registry = params.parameter_set()
    logger.info(f"CRAFT model ({config.variant.value}): {registry.count()} trainable parameters in {len(registry)} tensors")
    logger.info(
        f"Koopman ridge lambda {config.ridge_lambda} applies to the operator fit of the Koopman predictor "
        "(reported elsewhere as an internal trend mining setting)"
    )
    return registry
