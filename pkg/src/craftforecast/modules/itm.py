from dataclasses import dataclass
import logging

import numpy as np
from numpy.typing import ArrayLike

from craftforecast.common import ShapeException
from craftforecast.data.batch import NodeBatch
from craftforecast.numeric.ops import linear_forward, mlp_forward
from craftforecast.numeric.optim import xavier_init
from craftforecast.numeric.params import ParameterSet
from craftforecast.numeric.tensor import Parameter, Tensor, _lift, concat

logger = logging.getLogger(__name__)

__all__ = [
    "ItmParams",
    "itm_encode",
    "complete_forward",
    "adapt_forward",
    "itm_decode",
    "itm_decode_cfb",
    "loss_be_y",
]


@dataclass
class ItmParams:
    """
    Encoder and decoder over full L+P rows, shared by booking-curve rows and the label row, a
    linear complete network and a tanh adaptation network for the label path.
    """

    enc_W: Parameter
    enc_b: Parameter
    dec_W: Parameter
    dec_b: Parameter
    comp_W: Parameter
    comp_b: Parameter
    adapt_W: Parameter
    adapt_b: Parameter

    @classmethod
    def init(cls, L: int, P: int, D: int, rng: np.random.Generator, prefix: str = "itm") -> "ItmParams":
        width = L + P
        return cls(
            enc_W=Parameter(xavier_init(width, D, rng), f"{prefix}.encoder.W"),
            enc_b=Parameter(np.zeros(D), f"{prefix}.encoder.b"),
            dec_W=Parameter(xavier_init(D, width, rng), f"{prefix}.decoder.W"),
            dec_b=Parameter(np.zeros(width), f"{prefix}.decoder.b"),
            comp_W=Parameter(xavier_init(D, D, rng), f"{prefix}.complete.W"),
            comp_b=Parameter(np.zeros(D), f"{prefix}.complete.b"),
            adapt_W=Parameter(xavier_init(D, D, rng), f"{prefix}.adapt.W"),
            adapt_b=Parameter(np.zeros(D), f"{prefix}.adapt.b"),
        )

    def register(self, params: ParameterSet) -> None:
        for param in (
            self.enc_W,
            self.enc_b,
            self.dec_W,
            self.dec_b,
            self.comp_W,
            self.comp_b,
            self.adapt_W,
            self.adapt_b,
        ):
            params.register(param)

    @property
    def width(self) -> int:
        return self.enc_W.shape[0]


def itm_encode(batch: NodeBatch, y_init_T: Tensor | ArrayLike, params: ItmParams) -> tuple[Tensor, Tensor]:
    """
    Encode the trend of every check-in row (unknown snapshots zero-filled before decomposing)
    and the label row: the look-back trend followed by the initial forecast.
    """
    if params.width != batch.L + batch.P:
        raise ShapeException(f"itm: encoder expects rows of length {params.width}, batch has {batch.L + batch.P}")
    zc_rows = mlp_forward(batch.itm_trend, params.enc_W, params.enc_b)
    label_row = concat([batch.y_L_trend, _lift(y_init_T)], axis=-1)
    zy = mlp_forward(label_row, params.enc_W, params.enc_b)
    return zc_rows, zy


def complete_forward(z: Tensor | ArrayLike, params: ItmParams) -> Tensor:
    return linear_forward(z, params.comp_W, params.comp_b)


def adapt_forward(z: Tensor | ArrayLike, params: ItmParams) -> Tensor:
    return mlp_forward(z, params.adapt_W, params.adapt_b)


def itm_decode(z: Tensor | ArrayLike, params: ItmParams, P: int) -> Tensor:
    """
    Decode embeddings to full L+P rows and keep the last P entries, the forecast window.
    """
    return linear_forward(z, params.dec_W, params.dec_b)[..., -P:]


def itm_decode_cfb(zc_completed: Tensor | ArrayLike, params: ItmParams, P: int) -> Tensor:
    """
    Trend part of the completed booking-curve matrix: row i is the tail of the decoded row
    of check-in day i.
    """
    zc_completed = _lift(zc_completed)
    if zc_completed.ndim < 2 or zc_completed.shape[-2] != P:
        raise ShapeException(f"itm: expected {P} embedded rows, got shape {zc_completed.shape}")
    return itm_decode(zc_completed, params, P)


def loss_be_y(c_hat_TP: Tensor | ArrayLike, truth: ArrayLike) -> Tensor:
    """
    (2/P²)·Σ over the full P×P grid of (ĉ − c)², averaged over leading batch axes.
    """
    c_hat_TP = _lift(c_hat_TP)
    truth = np.asarray(truth, dtype=np.float64)
    P = c_hat_TP.shape[-1]
    if c_hat_TP.shape[-2:] != (P, P) or truth.shape != c_hat_TP.shape:
        raise ShapeException(f"loss_be_y: shapes {c_hat_TP.shape} and {truth.shape} differ or are not square")
    per_sample = ((c_hat_TP - truth) ** 2).sum(axis=(-2, -1)) * (2.0 / P**2)
    return per_sample.mean() if per_sample.ndim else per_sample
