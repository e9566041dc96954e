import numpy as np
from numpy.typing import ArrayLike

from craftforecast.common import NumericException, ShapeException, SingularMatrixException
from craftforecast.numeric.tensor import Array, Function, Tensor, _lift, check_finite

__all__ = ["mlp_forward", "linear_forward", "ridge_solve", "softmax_masked"]


def _check_layer(x: Tensor, W: Tensor, b: Tensor) -> None:
    if W.ndim != 2 or b.shape != (W.shape[1],) or x.shape[-1] != W.shape[0]:
        raise ShapeException(f"layer: input {x.shape}, weight {W.shape}, bias {b.shape} do not conform")


def linear_forward(x: Tensor | ArrayLike, W: Tensor | ArrayLike, b: Tensor | ArrayLike) -> Tensor:
    """
    x·W + b over the last axis of x.
    """
    x, W, b = _lift(x), _lift(W), _lift(b)
    _check_layer(x, W, b)
    return x @ W + b


def mlp_forward(x: Tensor | ArrayLike, W: Tensor | ArrayLike, b: Tensor | ArrayLike) -> Tensor:
    """
    tanh(x·W + b), every entry lands in (-1, 1).
    """
    return linear_forward(x, W, b).tanh()


class RidgeSolve(Function):
    """
    K = (AᵀA + λI)⁻¹AᵀB, differentiable in both A and B.
    """

    def forward(self, A, B, lam: float):
        normal = A.T @ A + lam * np.eye(A.shape[1])
        rhs = A.T @ B
        if lam == 0.0 and np.linalg.matrix_rank(normal) < normal.shape[0]:
            raise SingularMatrixException("ridge: AᵀA is singular and lambda is 0")
        try:
            K = np.linalg.solve(normal, rhs)
        except np.linalg.LinAlgError as e:
            raise SingularMatrixException(f"ridge: {e}") from e
        self.A, self.B, self.normal, self.K = A, B, normal, K
        return K

    def backward(self, grad):
        # the normal matrix is symmetric, so M⁻ᵀG = M⁻¹G
        grad_rhs = np.linalg.solve(self.normal, grad)
        grad_normal = -grad_rhs @ self.K.T
        grad_A = self.A @ (grad_normal + grad_normal.T) + self.B @ grad_rhs.T
        grad_B = self.A @ grad_rhs
        return grad_A, grad_B


def ridge_solve(A: Tensor | ArrayLike, B: Tensor | ArrayLike, lam: float) -> Tensor:
    A, B = _lift(A), _lift(B)
    if A.ndim != 2 or B.ndim != 2 or A.shape[0] != B.shape[0] or A.shape[0] < 1:
        raise ShapeException(f"ridge: A {A.shape} and B {B.shape} need the same number of rows")
    if lam < 0:
        raise NumericException(f"ridge: lambda must be >= 0, got {lam}")
    check_finite(A.data, "ridge input A")
    check_finite(B.data, "ridge input B")
    return RidgeSolve.apply(A, B, lam=float(lam))


class MaskedSoftmax(Function):
    def forward(self, scores, active):
        if not np.all(active.any(axis=-1)):
            raise NumericException("softmax: every row needs at least one active entry")
        shifted = np.where(active, scores, -np.inf)
        shifted = shifted - shifted.max(axis=-1, keepdims=True)
        weights = np.where(active, np.exp(shifted), 0.0)
        self.out = weights / weights.sum(axis=-1, keepdims=True)
        return self.out

    def backward(self, grad):
        inner = (grad * self.out).sum(axis=-1, keepdims=True)
        return (self.out * (grad - inner),)


def softmax_masked(scores: Tensor | ArrayLike, active: ArrayLike | None = None) -> Tensor:
    """
    Softmax over the last axis restricted to the active entries, inactive entries map to exactly 0.
    """
    scores = _lift(scores)
    mask: Array = np.ones(scores.shape, dtype=bool) if active is None else np.broadcast_to(active, scores.shape)
    return MaskedSoftmax.apply(scores, active=np.asarray(mask, dtype=bool))
