from dataclasses import dataclass, field
import logging

import numpy as np

from craftforecast.common import ConfigException, NonFiniteException
from craftforecast.numeric.params import ParameterSet
from craftforecast.numeric.tensor import Array, Parameter

logger = logging.getLogger(__name__)

__all__ = ["xavier_init", "AdamState", "adam_step", "Adam"]


def xavier_init(n_in: int, n_out: int, rng: np.random.Generator) -> Array:
    """Gaussian Xavier initialization, standard deviation √(2/(n_in+n_out))."""
    if n_in < 1 or n_out < 1:
        raise ConfigException(f"xavier: layer sizes must be >= 1, got {n_in}x{n_out}")
    return rng.normal(0.0, np.sqrt(2.0 / (n_in + n_out)), size=(n_in, n_out))


@dataclass
class AdamState:
    m: Array
    v: Array
    step: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, param: Parameter, **hyper) -> "AdamState":
        return cls(m=np.zeros_like(param.data), v=np.zeros_like(param.data), **hyper)


def adam_step(param: Parameter, state: AdamState) -> tuple[Parameter, AdamState]:
    grad = param.grad
    if grad is None:
        grad = np.zeros_like(param.data)
    if not np.all(np.isfinite(grad)):
        raise NonFiniteException(f"adam: non-finite gradient for {param.name}")
    state.step += 1
    state.m = state.beta1 * state.m + (1 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1 - state.beta2) * grad**2
    m_hat = state.m / (1 - state.beta1**state.step)
    v_hat = state.v / (1 - state.beta2**state.step)
    param.data = param.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return param, state


@dataclass
class Adam:
    params: ParameterSet
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    states: dict[str, AdamState] = field(default_factory=dict)

    def __post_init__(self):
        for param in self.params:
            self.states[param.name] = AdamState.fresh(
                param, lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps=self.eps
            )

    def zero_grad(self) -> None:
        self.params.zero_grad()

    def step(self) -> None:
        for param in self.params:
            adam_step(param, self.states[param.name])
