"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence

import numpy as np

from src.nn import losses, ops
from src.nn.tensor import Tensor, no_grad

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1e-4
TOLERANCE = 1e-4


def grad_check(
    fn: Callable[..., Tensor],
    inputs: Sequence[np.ndarray],
    eps: float = DEFAULT_EPS,
    seed: int = 0,
) -> float:
    """Compare backward() against central differences in float64.

    The output is reduced to a scalar by a fixed random projection, so every
    output element contributes to the check.

    Args:
        fn: Function of Tensors returning a Tensor.
        inputs: Input arrays; each is checked.
        eps: Finite-difference step.
        seed: Seed of the projection.

    Returns:
        Worst relative error over all inputs, where the error of one input is
        max|analytic - numeric| / max(max|numeric|, max|analytic|, 1e-12).
    """
    arrays = [np.array(x, dtype=np.float64) for x in inputs]
    tensors = [Tensor(x, requires_grad=True) for x in arrays]
    out = fn(*tensors)
    projection = np.random.default_rng(seed).standard_normal(out.shape)
    (out * projection).sum().backward()

    def objective() -> float:
        with no_grad():
            value = fn(*[Tensor(x) for x in arrays])
        return float((value.data * projection).sum())

    worst = 0.0
    for array, tensor in zip(arrays, tensors, strict=True):
        analytic = tensor.grad if tensor.grad is not None else np.zeros_like(array)
        numeric = np.zeros_like(array)
        flat = array.reshape(-1)
        numeric_flat = numeric.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + eps
            upper = objective()
            flat[i] = original - eps
            lower = objective()
            flat[i] = original
            numeric_flat[i] = (upper - lower) / (2 * eps)
        scale = max(float(np.abs(numeric).max(initial=0.0)), float(np.abs(analytic).max(initial=0.0)), 1e-12)
        worst = max(worst, float(np.abs(analytic - numeric).max(initial=0.0)) / scale)
    return worst


def _away_from_zero(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    return rng.choice([-1.0, 1.0], size=shape) * rng.uniform(0.1, 1.0, size=shape)


def op_cases(seed: int = 0) -> dict[str, tuple[Callable[..., Tensor], list[np.ndarray]]]:
    """One small random case per differentiable operation."""
    rng = np.random.default_rng(seed)

    def normal(*shape):
        return rng.standard_normal(shape)

    probs = np.exp(normal(2, 3, 4, 4))
    probs /= probs.sum(axis=1, keepdims=True)
    labels = rng.integers(0, 3, size=(2, 4, 4))

    return {
        "add": (lambda a, b: a + b, [normal(2, 3), normal(1, 3)]),
        "sub": (lambda a, b: a - b, [normal(2, 3), normal(2, 1)]),
        "mul": (lambda a, b: a * b, [normal(2, 3), normal(2, 3)]),
        "div": (lambda a, b: a / b, [normal(2, 3), _away_from_zero(rng, (2, 3)) + 2.0]),
        "pow": (lambda a: a**2, [normal(3, 4)]),
        "sum": (lambda a: a.sum(axis=1), [normal(3, 4)]),
        "mean": (lambda a: a.mean(), [normal(3, 4)]),
        "reshape": (lambda a: a.reshape(4, 3), [normal(3, 4)]),
        "index": (lambda a: a[:, 1:3], [normal(3, 4)]),
        "conv2d": (
            lambda x, w, b: ops.conv2d(x, w, b, stride=1, pad=1),
            [normal(2, 3, 5, 5), normal(4, 3, 3, 3), normal(4)],
        ),
        "conv2d_strided": (
            lambda x, w, b: ops.conv2d(x, w, b, stride=2, pad=1),
            [normal(1, 2, 6, 6), normal(3, 2, 3, 3), normal(3)],
        ),
        "upsample_nearest": (lambda x: ops.upsample_nearest(x, 2), [normal(1, 2, 3, 3)]),
        "leaky_relu": (lambda x: ops.leaky_relu(x, 0.1), [_away_from_zero(rng, (2, 3, 4))]),
        "softmax_over_classes": (lambda x: ops.softmax_over_classes(x), [normal(3, 4, 4)]),
        "mix_rows": (ops.mix_rows, [normal(2, 3, 4, 5), normal(3, 6, 4), normal(3, 6)]),
        "mix_cols": (ops.mix_cols, [normal(2, 3, 4, 5), normal(3, 2, 5), normal(3, 2)]),
        "concat": (lambda a, b: ops.concat([a, b], axis=1), [normal(2, 3), normal(2, 2)]),
        "stack": (lambda a, b: ops.stack([a, b], axis=1), [normal(2, 3), normal(2, 3)]),
        "cross_entropy": (
            lambda p: losses.cross_entropy(p, labels, class_weights=(0.2, 1.0, 1.0)),
            [probs],
        ),
        "lsgan_gen_loss": (losses.lsgan_gen_loss, [normal(2, 1, 3, 3)]),
        "lsgan_disc_loss": (losses.lsgan_disc_loss, [normal(2, 1, 3, 3), normal(2, 1, 3, 3)]),
    }


def check_all_ops(seed: int = 0, eps: float = DEFAULT_EPS) -> dict[str, float]:
    """Run grad_check on every differentiable operation.

    Returns:
        Worst relative error per operation name.
    """
    results = {}
    for name, (fn, inputs) in op_cases(seed).items():
        results[name] = grad_check(fn, inputs, eps=eps, seed=seed)
        logger.debug(f"grad_check {name}: {results[name]:.3e}")
    return results
