"""Tensor with reverse-mode gradients.

Every differentiable operation returns a new Tensor that remembers its inputs
and a closure mapping the output gradient to input gradients. `backward`
walks that graph in reverse topological order. Leaves created with
`requires_grad=True` accumulate into `.grad`.

Values keep the dtype they were created with: float32 for training,
float64 when an array of that dtype is passed in (gradient checks).
"""

from __future__ import annotations

import threading
from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from src.errors import ContractViolation

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]

_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Build no graph inside the block (evaluation, finite differences)."""
    previous = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = previous


@dataclass
class Node:
    """How a tensor was produced."""

    op: str
    inputs: tuple[Tensor, ...]
    backward: BackwardFn


def as_array(value, dtype=None) -> np.ndarray:
    array = np.asarray(value)
    if dtype is not None:
        return array.astype(dtype, copy=False)
    if not np.issubdtype(array.dtype, np.floating):
        return array.astype(np.float32)
    return array


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """An array plus the bookkeeping needed to differentiate through it.

    Attributes:
        data: Values.
        grad: Accumulated gradient (leaves only), same shape as data.
        requires_grad: Whether gradients flow to this tensor.
        node: Producing operation, None for leaves.
        name: Optional parameter name.
    """

    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: str = "", dtype=None):
        self.data = as_array(data, dtype)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.node: Node | None = None
        self.name = name

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label})"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> Tensor:
        """Same values, cut from the graph."""
        return Tensor(self.data)

    @staticmethod
    def from_op(data: np.ndarray, op: str, inputs: Sequence[Tensor], backward: BackwardFn) -> Tensor:
        """Wrap an op result, recording the graph edge when gradients are needed."""
        out = Tensor(data)
        if grad_enabled() and any(t.requires_grad for t in inputs):
            out.requires_grad = True
            out.node = Node(op=op, inputs=tuple(inputs), backward=backward)
        return out

    def backward(self, grad: np.ndarray | None = None) -> None:
        """Accumulate d(self)/d(leaf) into every reachable leaf's `.grad`.

        Args:
            grad: Upstream gradient; defaults to 1 for scalar tensors.
        """
        if grad is None:
            if self.data.size != 1:
                raise ContractViolation(f"backward() needs an explicit gradient for shape {self.shape}")
            grad = np.ones_like(self.data)

        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            tensor, expanded = stack.pop()
            if expanded:
                order.append(tensor)
                continue
            if id(tensor) in seen:
                continue
            seen.add(id(tensor))
            stack.append((tensor, True))
            if tensor.node is not None:
                for parent in tensor.node.inputs:
                    if parent.requires_grad and id(parent) not in seen:
                        stack.append((parent, False))

        grads: dict[int, np.ndarray] = {id(self): np.asarray(grad, dtype=self.dtype)}
        for tensor in reversed(order):
            g = grads.pop(id(tensor), None)
            if g is None:
                continue
            if tensor.node is None:
                tensor.grad = g.copy() if tensor.grad is None else tensor.grad + g
                continue
            parent_grads = tensor.node.backward(g)
            for parent, pg in zip(tensor.node.inputs, parent_grads, strict=True):
                if pg is None or not parent.requires_grad:
                    continue
                pg = unbroadcast(np.asarray(pg), parent.shape).astype(parent.dtype, copy=False)
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg

    # Arithmetic

    def __add__(self, other) -> Tensor:
        other = ensure_tensor(other, self.dtype)
        return Tensor.from_op(self.data + other.data, "add", (self, other), lambda g: (g, g))

    __radd__ = __add__

    def __sub__(self, other) -> Tensor:
        other = ensure_tensor(other, self.dtype)
        return Tensor.from_op(self.data - other.data, "sub", (self, other), lambda g: (g, -g))

    def __rsub__(self, other) -> Tensor:
        return ensure_tensor(other, self.dtype) - self

    def __mul__(self, other) -> Tensor:
        other = ensure_tensor(other, self.dtype)
        a, b = self.data, other.data
        return Tensor.from_op(a * b, "mul", (self, other), lambda g: (g * b, g * a))

    __rmul__ = __mul__

    def __truediv__(self, other) -> Tensor:
        other = ensure_tensor(other, self.dtype)
        a, b = self.data, other.data
        return Tensor.from_op(a / b, "div", (self, other), lambda g: (g / b, -g * a / (b * b)))

    def __neg__(self) -> Tensor:
        return Tensor.from_op(-self.data, "neg", (self,), lambda g: (-g,))

    def __pow__(self, exponent: float) -> Tensor:
        a = self.data
        return Tensor.from_op(
            a**exponent, "pow", (self,), lambda g: (g * exponent * a ** (exponent - 1),)
        )

    # Reductions and views

    def sum(self, axis=None, keepdims: bool = False) -> Tensor:
        shape = self.shape

        def backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape),)

        return Tensor.from_op(self.data.sum(axis=axis, keepdims=keepdims), "sum", (self,), backward)

    def mean(self, axis=None, keepdims: bool = False) -> Tensor:
        count = self.data.size if axis is None else np.prod([self.shape[a] for a in np.atleast_1d(axis)])
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / float(count))

    def reshape(self, *shape) -> Tensor:
        if len(shape) == 1 and isinstance(shape[0], tuple | list):
            shape = tuple(shape[0])
        original = self.shape
        return Tensor.from_op(
            self.data.reshape(shape), "reshape", (self,), lambda g: (g.reshape(original),)
        )

    def __getitem__(self, index) -> Tensor:
        shape, dtype = self.shape, self.dtype

        def backward(g):
            out = np.zeros(shape, dtype=dtype)
            np.add.at(out, index, g)
            return (out,)

        return Tensor.from_op(self.data[index], "index", (self,), backward)


def ensure_tensor(value, dtype=None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=dtype))
