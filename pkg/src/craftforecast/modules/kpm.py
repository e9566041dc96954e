"""
Koopman predictor: a shared encoder lifts booking-curve rows into an embedding where one
window evolves into the next by a linear operator, fit by ridge regression per batch. The
same operator moves the label embedding forward to give an initial trend forecast.
"""

from dataclasses import dataclass
import logging

import numpy as np
from numpy.typing import ArrayLike

from craftforecast.common import ShapeException
from craftforecast.data.batch import NodeBatch
from craftforecast.data.samples import CfbMatrix, lower_mask
from craftforecast.numeric.ops import linear_forward, mlp_forward, ridge_solve
from craftforecast.numeric.optim import xavier_init
from craftforecast.numeric.params import ParameterSet
from craftforecast.numeric.tensor import Parameter, Tensor, _lift

logger = logging.getLogger(__name__)

__all__ = ["KpmParams", "KpmOutput", "koopman_fit", "kpm_forward", "loss_be_k"]


@dataclass
class KpmParams:
    enc_W: Parameter
    enc_b: Parameter
    dec_W: Parameter
    dec_b: Parameter

    @classmethod
    def init(cls, P: int, D: int, rng: np.random.Generator, prefix: str = "kpm") -> "KpmParams":
        return cls(
            enc_W=Parameter(xavier_init(P, D, rng), f"{prefix}.encoder.W"),
            enc_b=Parameter(np.zeros(D), f"{prefix}.encoder.b"),
            dec_W=Parameter(xavier_init(D, P, rng), f"{prefix}.decoder.W"),
            dec_b=Parameter(np.zeros(P), f"{prefix}.decoder.b"),
        )

    def register(self, params: ParameterSet) -> None:
        for param in (self.enc_W, self.enc_b, self.dec_W, self.dec_b):
            params.register(param)

    @property
    def P(self) -> int:
        return self.enc_W.shape[0]

    def encode(self, x: Tensor | ArrayLike) -> Tensor:
        return mlp_forward(x, self.enc_W, self.enc_b)

    def decode(self, z: Tensor) -> Tensor:
        return linear_forward(z, self.dec_W, self.dec_b)


@dataclass
class KpmOutput:
    K_C: Tensor
    c_hat_P: Tensor
    y_init_T: Tensor
    loss_be_k: Tensor


def koopman_fit(ZC_L: Tensor | ArrayLike, ZC_P: Tensor | ArrayLike, lam: float) -> Tensor:
    """
    K_C minimizing ‖ZC_L·K − ZC_P‖² + λ‖K‖², differentiable in both embeddings.
    """
    return ridge_solve(ZC_L, ZC_P, lam)


def loss_be_k(c_hat_P: Tensor | ArrayLike, c_P: CfbMatrix | ArrayLike) -> Tensor:
    """
    (2/P²)·Σ_{j≤i} (ĉ[i,j] − c[i,j])², averaged over any leading batch axes. Entries above the
    diagonal are unknown at the origin and get no loss and no gradient.
    """
    c_hat_P = _lift(c_hat_P)
    values = c_P.values if isinstance(c_P, CfbMatrix) else np.asarray(c_P, dtype=np.float64)
    P = c_hat_P.shape[-1]
    if c_hat_P.shape[-2:] != (P, P) or values.shape[-2:] != (P, P):
        raise ShapeException(f"loss_be_k: expected P×P matrices, got {c_hat_P.shape} and {values.shape}")
    masked = (c_hat_P - values) * lower_mask(P)
    per_sample = (masked**2).sum(axis=(-2, -1)) * (2.0 / P**2)
    return per_sample.mean() if per_sample.ndim else per_sample


def kpm_forward(batch: NodeBatch, params: KpmParams, lam: float) -> KpmOutput:
    N, P = batch.n_nodes, batch.P
    if params.P != P:
        raise ShapeException(f"kpm: encoder expects rows of length {params.P}, batch has P={P}")
    ZC_L = params.encode(batch.c_L_trend)
    ZC_P = params.encode(batch.c_P_values)
    D = ZC_L.shape[-1]
    K_C = koopman_fit(ZC_L.reshape(N * P, D), ZC_P.reshape(N * P, D), lam)
    c_hat_P = params.decode(ZC_L @ K_C)
    ZY = params.encode(batch.y_L_trend[:, -P:])
    y_init_T = params.decode(ZY @ K_C)
    return KpmOutput(K_C=K_C, c_hat_P=c_hat_P, y_init_T=y_init_T, loss_be_k=loss_be_k(c_hat_P, batch.c_P_values))
