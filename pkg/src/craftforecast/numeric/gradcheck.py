from typing import Callable, Iterable

import numpy as np

from craftforecast.numeric.tensor import Parameter, Tensor


def grad_check(
    f: Callable[[], Tensor], params: Iterable[Parameter], epsilon: float = 1e-5, floor: float = 1.0
) -> float:
    """
    Compare the analytic gradients of the scalar f against central finite differences
    (f(x+ε) − f(x−ε)) / 2ε, coordinate by coordinate, and return the worst error
    |analytic − numeric| / max(|analytic|, |numeric|, floor).

    With the default floor of 1 this is a mixed error: absolute for gradients below 1 and
    relative above. A tiny floor makes it relative everywhere.
    """
    params = list(params)
    for param in params:
        param.zero_grad()
    f().backward()
    analytic = [param.grad.copy() for param in params]

    worst = 0.0
    for param, grad in zip(params, analytic):
        for index in np.ndindex(param.data.shape):
            original = param.data[index]
            param.data[index] = original + epsilon
            upper = f().item()
            param.data[index] = original - epsilon
            lower = f().item()
            param.data[index] = original
            numeric = (upper - lower) / (2 * epsilon)
            error = abs(grad[index] - numeric) / max(abs(grad[index]), abs(numeric), floor)
            worst = max(worst, error)
    return worst
