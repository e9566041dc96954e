from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from craftforecast.common import NonFiniteException, ShapeException

type Array = NDArray[np.float64]

__all__ = ["Array", "Tensor", "Parameter", "Function", "as_array", "check_finite", "concat", "where"]


def as_array(value: ArrayLike) -> Array:
    return np.asarray(value, dtype=np.float64)


def _unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """
    Sum a broadcast gradient back down to the shape of the operand it flows into.
    """
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, size in enumerate(shape) if size == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """
    A float64 array that remembers the Function that produced it, so that `backward`
    can walk the graph in reverse and fill `grad` on every leaf that requires it.
    """

    def __init__(self, data: ArrayLike, ctx: "Function | None" = None, requires_grad: bool = False):
        self.data = as_array(data)
        self.grad: Array | None = None
        self._ctx = ctx
        self.requires_grad = requires_grad or ctx is not None

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data.reshape(()))

    def __neg__(self):
        return Neg.apply(self)

    def __add__(self, other):
        return Add.apply(self, other)

    def __radd__(self, other):
        return Add.apply(other, self)

    def __sub__(self, other):
        return Sub.apply(self, other)

    def __rsub__(self, other):
        return Sub.apply(other, self)

    def __mul__(self, other):
        return Mul.apply(self, other)

    def __rmul__(self, other):
        return Mul.apply(other, self)

    def __truediv__(self, other: float):
        return Mul.apply(self, 1.0 / other)

    def __matmul__(self, other):
        return MatMul.apply(self, other)

    def __rmatmul__(self, other):
        return MatMul.apply(other, self)

    def __pow__(self, exponent: float):
        return Pow.apply(self, exponent=exponent)

    def __getitem__(self, index):
        return GetItem.apply(self, index=index)

    def tanh(self):
        return Tanh.apply(self)

    def sum(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False):
        return Sum.apply(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False):
        count = self.data.size if axis is None else np.prod([self.shape[a] for a in np.atleast_1d(axis)])
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / float(count))

    def reshape(self, *shape: int):
        return Reshape.apply(self, shape=shape)

    def swap_last(self):
        return SwapLast.apply(self)

    def backward(self, grad: ArrayLike | None = None) -> None:
        if grad is None:
            if self.data.size != 1:
                raise ShapeException("backward without an explicit gradient needs a scalar output")
            seed = np.ones_like(self.data)
        else:
            seed = as_array(grad)

        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            if node._ctx is not None:
                for parent in node._ctx.parents:
                    if parent.requires_grad and id(parent) not in seen:
                        stack.append((parent, False))

        grads: dict[int, Array] = {id(self): seed}
        for node in reversed(order):
            node_grad = grads.pop(id(node), None)
            if node_grad is None:
                continue
            if node._ctx is None:
                node.grad = node_grad.copy() if node.grad is None else node.grad + node_grad
                continue
            for parent, parent_grad in zip(node._ctx.parents, node._ctx.backward(node_grad)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                if id(parent) in grads:
                    grads[id(parent)] = grads[id(parent)] + parent_grad
                else:
                    grads[id(parent)] = parent_grad


class Parameter(Tensor):
    """
    A named trainable leaf.
    """

    def __init__(self, data: ArrayLike, name: str):
        super().__init__(np.array(data, dtype=np.float64), requires_grad=True)
        self.name = name
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        return f"Parameter({self.name}, shape={self.shape})"

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)


def _lift(value: "Tensor | ArrayLike") -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


class Function:
    def __init__(self, *parents: Tensor):
        self.parents = parents

    @classmethod
    def apply(cls, *args: "Tensor | ArrayLike", **kwargs) -> Tensor:
        tensors = [_lift(arg) for arg in args]
        fn = cls(*tensors)
        out = fn.forward(*[t.data for t in tensors], **kwargs)
        if any(t.requires_grad for t in tensors):
            return Tensor(out, ctx=fn)
        return Tensor(out)

    def forward(self, *args, **kwargs) -> Array:
        raise NotImplementedError

    def backward(self, grad: Array) -> Sequence[Array | None]:
        raise NotImplementedError


class Neg(Function):
    def forward(self, x):
        return -x

    def backward(self, grad):
        return (-grad,)


class Add(Function):
    def forward(self, x, y):
        self.shapes = x.shape, y.shape
        return x + y

    def backward(self, grad):
        return _unbroadcast(grad, self.shapes[0]), _unbroadcast(grad, self.shapes[1])


class Sub(Function):
    def forward(self, x, y):
        self.shapes = x.shape, y.shape
        return x - y

    def backward(self, grad):
        return _unbroadcast(grad, self.shapes[0]), _unbroadcast(-grad, self.shapes[1])


class Mul(Function):
    def forward(self, x, y):
        self.x, self.y = x, y
        return x * y

    def backward(self, grad):
        return _unbroadcast(grad * self.y, self.x.shape), _unbroadcast(grad * self.x, self.y.shape)


class Pow(Function):
    def forward(self, x, exponent: float):
        self.x, self.exponent = x, exponent
        return x**exponent

    def backward(self, grad):
        return (grad * self.exponent * self.x ** (self.exponent - 1),)


class MatMul(Function):
    def forward(self, x, y):
        if x.ndim < 2 or y.ndim < 2 or x.shape[-1] != y.shape[-2]:
            raise ShapeException(f"matmul: cannot multiply {x.shape} by {y.shape}")
        self.x, self.y = x, y
        return x @ y

    def backward(self, grad):
        grad_x = grad @ np.swapaxes(self.y, -1, -2)
        grad_y = np.swapaxes(self.x, -1, -2) @ grad
        return _unbroadcast(grad_x, self.x.shape), _unbroadcast(grad_y, self.y.shape)


class Tanh(Function):
    def forward(self, x):
        self.out = np.tanh(x)
        return self.out

    def backward(self, grad):
        return (grad * (1.0 - self.out**2),)


class Sum(Function):
    def forward(self, x, axis, keepdims):
        self.shape, self.axis, self.keepdims = x.shape, axis, keepdims
        return np.asarray(x.sum(axis=axis, keepdims=keepdims))

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad, self.shape).copy(),)


class Reshape(Function):
    def forward(self, x, shape):
        self.shape = x.shape
        return x.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.shape),)


class SwapLast(Function):
    def forward(self, x):
        return np.swapaxes(x, -1, -2)

    def backward(self, grad):
        return (np.swapaxes(grad, -1, -2),)


class GetItem(Function):
    def forward(self, x, index):
        self.shape, self.index = x.shape, index
        return np.array(x[index])

    def backward(self, grad):
        full = np.zeros(self.shape)
        if _basic_index(self.index):
            full[self.index] = grad
        else:
            np.add.at(full, self.index, grad)
        return (full,)


def _basic_index(index) -> bool:
    parts = index if isinstance(index, tuple) else (index,)
    return all(part is Ellipsis or part is None or isinstance(part, (int, slice)) for part in parts)


class Concat(Function):
    def forward(self, *parts, axis: int):
        self.axis = axis
        self.sizes = [part.shape[axis] for part in parts]
        return np.concatenate(parts, axis=axis)

    def backward(self, grad):
        splits = np.cumsum(self.sizes)[:-1]
        return tuple(np.split(grad, splits, axis=self.axis))


class Where(Function):
    def forward(self, x, y, condition):
        self.condition = condition
        self.shapes = x.shape, y.shape
        return np.where(condition, x, y)

    def backward(self, grad):
        return (
            _unbroadcast(np.where(self.condition, grad, 0.0), self.shapes[0]),
            _unbroadcast(np.where(self.condition, 0.0, grad), self.shapes[1]),
        )


def concat(parts: Sequence["Tensor | ArrayLike"], axis: int = -1) -> Tensor:
    return Concat.apply(*parts, axis=axis)


def where(condition: ArrayLike, x: "Tensor | ArrayLike", y: "Tensor | ArrayLike") -> Tensor:
    """
    Elementwise select with a constant condition, the gradient only reaches the selected operand.
    """
    return Where.apply(x, y, condition=np.asarray(condition, dtype=bool))


def check_finite(values: Array, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteException(f"{what} contains non-finite values")
