"""
External trend guide: attention among the nodes of a sampled hierarchy group calibrates
the children's label embeddings, the virtual parent passes through unchanged.
"""

from dataclasses import dataclass
import logging

import numpy as np
from numpy.typing import ArrayLike

from craftforecast.common import ShapeException
from craftforecast.numeric.ops import softmax_masked
from craftforecast.numeric.optim import xavier_init
from craftforecast.numeric.params import ParameterSet
from craftforecast.numeric.tensor import Array, Parameter, Tensor, _lift, where

logger = logging.getLogger(__name__)

__all__ = ["EtgParams", "GroupBatch", "reconciliation_matrix", "calibrate", "etg_forward", "loss_recon"]


@dataclass
class EtgParams:
    W_q: Parameter
    W_k: Parameter
    W_v: Parameter

    @classmethod
    def init(cls, D: int, rng: np.random.Generator, prefix: str = "etg") -> "EtgParams":
        """
        Xavier query and key. The value projection starts as the identity, so an untrained guide
        mixes the group embeddings by attention alone.
        """
        return cls(
            W_q=Parameter(xavier_init(D, D, rng), f"{prefix}.W_q"),
            W_k=Parameter(xavier_init(D, D, rng), f"{prefix}.W_k"),
            W_v=Parameter(np.eye(D), f"{prefix}.W_v"),
        )

    def register(self, params: ParameterSet) -> None:
        for param in (self.W_q, self.W_k, self.W_v):
            params.register(param)


@dataclass
class GroupBatch:
    """
    Node embeddings reshaped from [g·(m+1), D] to [g, m+1, D], the parent of each group last.
    """

    z: Tensor
    parent_flags: Array

    @classmethod
    def from_nodes(cls, z: Tensor, g: int, m: int) -> "GroupBatch":
        if z.shape[0] != g * (m + 1):
            raise ShapeException(f"etg: {z.shape[0]} nodes do not form {g} groups of {m + 1}")
        flags = np.zeros((g, m + 1), dtype=bool)
        flags[:, m] = True
        return cls(z=z.reshape(g, m + 1, z.shape[-1]), parent_flags=flags)

    @property
    def g(self) -> int:
        return self.z.shape[0]

    def flat(self, z: Tensor) -> Tensor:
        return z.reshape(self.z.shape[0] * self.z.shape[1], self.z.shape[2])


def _check_group(z: Tensor, params: EtgParams) -> None:
    D = params.W_q.shape[0]
    if z.ndim < 2 or z.shape[-1] != D:
        raise ShapeException(f"etg: node embeddings {z.shape} do not match width {D}")


def reconciliation_matrix(z_group: Tensor | ArrayLike, params: EtgParams) -> Tensor:
    """
    B[i, k] = softmax over the group of ⟨z_i·W_q, z_k·W_k⟩ / √D.
    """
    z = _lift(z_group)
    _check_group(z, params)
    D = z.shape[-1]
    scores = (z @ params.W_q) @ (z @ params.W_k).swap_last() * (1.0 / np.sqrt(D))
    return softmax_masked(scores)


def calibrate(z_group: Tensor | ArrayLike, B: Tensor | ArrayLike, params: EtgParams, parent_flags: ArrayLike) -> Tensor:
    """
    Children become B-weighted mixtures of the projected group, parents are returned as they came.
    """
    z, B = _lift(z_group), _lift(B)
    _check_group(z, params)
    flags = np.asarray(parent_flags, dtype=bool)
    if flags.shape != z.shape[:-1]:
        raise ShapeException(f"etg: parent flags {flags.shape} do not match nodes {z.shape[:-1]}")
    mixed = B @ (z @ params.W_v)
    return where(flags[..., None], z, mixed)


def etg_forward(group: GroupBatch, params: EtgParams) -> Tensor:
    B = reconciliation_matrix(group.z, params)
    return calibrate(group.z, B, params, group.parent_flags)


def loss_recon(y_hat_group: Tensor | ArrayLike) -> Tensor:
    """
    (1/g²)·Σ_groups ‖ŷ(parent) − Σ ŷ(children)‖² for predictions shaped [g, m+1, P], parent last.
    """
    y = _lift(y_hat_group)
    if y.ndim != 3 or y.shape[1] < 2:
        raise ShapeException(f"loss_recon: expected [g, m+1, P] predictions, got {y.shape}")
    g = y.shape[0]
    gap = y[:, -1, :] - y[:, :-1, :].sum(axis=1)
    return (gap**2).sum() * (1.0 / g**2)
