from craftforecast.numeric.ops import linear_forward, mlp_forward, ridge_solve, softmax_masked
from craftforecast.numeric.optim import Adam, AdamState, adam_step, xavier_init
from craftforecast.numeric.params import ParameterSet
from craftforecast.numeric.tensor import Array, Parameter, Tensor, concat, where

__all__ = [
    "Adam",
    "AdamState",
    "Array",
    "Parameter",
    "ParameterSet",
    "Tensor",
    "adam_step",
    "concat",
    "linear_forward",
    "mlp_forward",
    "ridge_solve",
    "softmax_masked",
    "where",
    "xavier_init",
]
