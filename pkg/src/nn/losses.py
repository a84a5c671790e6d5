"""Supervised and least-squares adversarial losses."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from src.errors import ContractViolation
from src.nn.tensor import Tensor

PROB_FLOOR = 1e-12


def cross_entropy(
    probs: Tensor, labels: np.ndarray, class_weights: Sequence[float] | None = None
) -> Tensor:
    """Per-cell cross entropy, averaged per map and summed over maps.

    Each [K, D, D] map contributes sum(w_y * -ln p_y) / sum(w_y) over its
    cells, where y is the cell's label. With unit weights that is the plain
    mean. Leading axes (batch, shelf) are summed.

    Args:
        probs: Class probabilities [..., K, D, D].
        labels: Integer labels [..., D, D].
        class_weights: Optional weight per class.

    Returns:
        Scalar loss.

    Raises:
        ContractViolation: On shape mismatch or labels outside [0, K).
    """
    num_classes = probs.shape[-3]
    labels = np.asarray(labels)
    if labels.shape != probs.shape[:-3] + probs.shape[-2:]:
        raise ContractViolation(f"Labels {labels.shape} do not match probabilities {probs.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ContractViolation(
            f"Labels must lie in [0, {num_classes}), found [{labels.min()}, {labels.max()}]"
        )
    weights = np.ones(num_classes) if class_weights is None else np.asarray(class_weights, dtype=np.float64)
    if weights.shape != (num_classes,):
        raise ContractViolation(f"Expected {num_classes} class weights, got {weights.shape}")

    index = np.expand_dims(labels.astype(np.intp), axis=-3)
    picked = np.take_along_axis(probs.data, index, axis=-3)[..., 0, :, :]
    safe = np.maximum(picked, PROB_FLOOR)
    cell_w = weights[labels].astype(probs.dtype)
    norm = cell_w.sum(axis=(-2, -1), keepdims=True)
    loss = (cell_w * -np.log(safe) / norm).sum()

    def backward(g):
        grad_picked = np.where(picked > PROB_FLOOR, -cell_w / (safe * norm), 0.0) * g
        grad = np.zeros_like(probs.data)
        np.put_along_axis(grad, index, np.expand_dims(grad_picked, axis=-3).astype(grad.dtype), axis=-3)
        return (grad,)

    return Tensor.from_op(np.asarray(loss, dtype=probs.dtype), "cross_entropy", (probs,), backward)


def lsgan_gen_loss(fake_scores: Tensor) -> Tensor:
    """mean((s - 1)^2): pushes generated layouts towards a 'real' score."""
    return ((fake_scores - 1.0) ** 2).mean()


def lsgan_disc_loss(real_scores: Tensor, fake_scores: Tensor) -> Tensor:
    """mean((s_real - 1)^2) + mean(s_fake^2)."""
    return ((real_scores - 1.0) ** 2).mean() + (fake_scores**2).mean()
