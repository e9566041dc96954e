from dataclasses import dataclass
import logging

import numpy as np

from craftforecast.common import BatchException
from craftforecast.data.hierarchy import HierGroup
from craftforecast.data.samples import ForecastSample, itm_observed_mask, stack
from craftforecast.modules.decomposition import decompose, fit_kernel
from craftforecast.numeric.tensor import Array

logger = logging.getLogger(__name__)

__all__ = ["NodeBatch", "value_scale"]


def value_scale(samples: list[ForecastSample]) -> float:
    """
    Mean look-back label of the given samples, at least 1.
    """
    if not samples:
        return 1.0
    return max(float(np.mean([sample.y_L.mean() for sample in samples])), 1.0)


@dataclass
class NodeBatch:
    """
    g hierarchy groups of m children and one virtual parent, stacked node by node with the
    children of a group first and its parent last. Additive quantities are divided by `scale`
    and, with node scaling, by each node's `levels` entry on top, its look-back level in
    units of `scale`. The decompositions every module needs are computed once here.
    """

    groups: list[HierGroup]
    scale: float
    kernel: int
    L: int
    P: int
    m: int
    y_L: Array
    y_P: Array
    y_lower: Array
    y_upper: Array
    c_Lmat: Array
    c_P_values: Array
    c_P_truth: Array
    itm_rows: Array
    reported: Array
    is_parent: Array
    levels: Array
    # decompositions
    y_L_trend: Array
    y_L_residual: Array
    c_L_trend: Array
    c_L_residual: Array
    itm_trend: Array

    @classmethod
    def from_groups(
        cls, groups: list[HierGroup], kernel: int, scale: float = 1.0, node_scaling: bool = False
    ) -> "NodeBatch":
        if not groups:
            raise BatchException("a batch needs at least one group")
        m = groups[0].m
        if any(group.m != m for group in groups):
            raise BatchException("all groups of a batch must have the same number of children")
        nodes = [node for group in groups for node in group.nodes]
        L, P = nodes[0].L, nodes[0].P
        if any((node.L, node.P) != (L, P) for node in nodes):
            raise BatchException("samples of one batch must share window lengths")

        levels = np.ones(len(nodes))
        if node_scaling:
            levels = np.maximum([node.y_L.mean() for node in nodes], 1.0) / scale

        def field(name: str) -> Array:
            values = stack(nodes, name) / scale
            return values / levels.reshape((-1,) + (1,) * (values.ndim - 1))

        y_L = field("y_L")
        c_Lmat = field("c_Lmat")
        c_P_truth = field("c_P")
        mask = np.tri(P, dtype=bool)
        itm_rows = field("itm_rows")
        observed = np.where(itm_observed_mask(L, P), itm_rows, 0.0)

        y_dec = decompose(y_L, fit_kernel(kernel, L))
        c_dec = decompose(c_Lmat, fit_kernel(kernel, P))
        itm_dec = decompose(observed, fit_kernel(kernel, L + P))
        return cls(
            groups=groups,
            scale=scale,
            kernel=kernel,
            L=L,
            P=P,
            m=m,
            y_L=y_L,
            y_P=field("y_P"),
            y_lower=field("y_lower"),
            y_upper=field("y_upper"),
            c_Lmat=c_Lmat,
            c_P_values=np.where(mask, c_P_truth, 0.0),
            c_P_truth=c_P_truth,
            itm_rows=itm_rows,
            reported=np.array([node.reported for node in nodes]),
            is_parent=np.array([i == m for _ in groups for i in range(m + 1)]),
            levels=levels,
            y_L_trend=y_dec.trend,
            y_L_residual=y_dec.residual,
            c_L_trend=c_dec.trend,
            c_L_residual=c_dec.residual,
            itm_trend=itm_dec.trend,
        )

    @property
    def g(self) -> int:
        return len(self.groups)

    @property
    def n_nodes(self) -> int:
        return self.g * (self.m + 1)

    def nodes(self) -> list[ForecastSample]:
        return [node for group in self.groups for node in group.nodes]
