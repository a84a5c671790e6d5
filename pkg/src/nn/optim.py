"""SGD with momentum."""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from src.nn.tensor import Tensor


def sgd_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    lr: float,
    momentum: float,
    velocities: Mapping[str, np.ndarray] | None = None,
) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
    """One momentum update: v <- mu*v + g, p <- p - lr*v.

    Parameters without a gradient keep their value and velocity.

    Returns:
        (updated params, updated velocities). Inputs are not modified.
    """
    velocities = velocities or {}
    new_params: dict[str, np.ndarray] = {}
    new_velocities: dict[str, np.ndarray] = {}
    for name, value in params.items():
        v = velocities.get(name)
        g = grads.get(name)
        if g is None:
            new_params[name] = value
            if v is not None:
                new_velocities[name] = v
            continue
        v = g if v is None else momentum * v + g
        new_velocities[name] = v.astype(value.dtype, copy=False)
        new_params[name] = (value - lr * new_velocities[name]).astype(value.dtype, copy=False)
    return new_params, new_velocities


class SGD:
    """Momentum SGD over a fixed set of named tensors."""

    def __init__(self, params: Mapping[str, Tensor], lr: float = 0.01, momentum: float = 0.9):
        self.params = dict(params)
        self.lr = lr
        self.momentum = momentum
        self.velocities: dict[str, np.ndarray] = {}

    def zero_grad(self) -> None:
        for tensor in self.params.values():
            tensor.zero_grad()

    def step(self) -> None:
        values = {name: t.data for name, t in self.params.items()}
        grads = {name: t.grad for name, t in self.params.items() if t.grad is not None}
        updated, self.velocities = sgd_step(values, grads, self.lr, self.momentum, self.velocities)
        for name, tensor in self.params.items():
            tensor.data = updated[name]
