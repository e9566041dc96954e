from typing import Iterator

import numpy as np

from craftforecast.common import NumericException
from craftforecast.numeric.tensor import Array, Parameter


class ParameterSet:
    """
    Ordered registry of trainable tensors, every Parameter may be registered once.
    """

    def __init__(self):
        self._params: dict[str, Parameter] = {}

    def register(self, param: Parameter) -> Parameter:
        if param.name in self._params:
            raise NumericException(f"parameter {param.name} registered twice")
        if any(existing is param for existing in self._params.values()):
            raise NumericException(f"parameter object {param.name} registered under two names")
        self._params[param.name] = param
        return param

    def __iter__(self) -> Iterator[Parameter]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def names(self) -> list[str]:
        return list(self._params)

    def count(self) -> int:
        """
        Total number of trainable scalars.
        """
        return sum(param.data.size for param in self._params.values())

    def zero_grad(self) -> None:
        for param in self._params.values():
            param.zero_grad()

    def state_dict(self) -> dict[str, Array]:
        return {name: param.data.copy() for name, param in self._params.items()}

    def load_state_dict(self, state: dict[str, Array]) -> None:
        missing = set(self._params) - set(state)
        if missing:
            raise NumericException(f"missing parameters: {', '.join(sorted(missing))}")
        for name, param in self._params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != param.data.shape:
                raise NumericException(f"parameter {name}: expected shape {param.data.shape}, got {value.shape}")
            param.data = value.copy()
