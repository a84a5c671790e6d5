"""Differentiable layer operations.

Image-like tensors are [N, C, H, W]; conv2d also accepts a single [C, H, W].
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.errors import ContractViolation
from src.nn.tensor import Tensor


def conv_output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    """Output length of a strided convolution; trailing partial windows are dropped."""
    return (size + 2 * pad - kernel) // stride + 1


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1, pad: int = 0) -> Tensor:
    """2-D cross-correlation plus bias.

    Args:
        x: Input [N, C_in, H, W] or [C_in, H, W].
        w: Kernels [C_out, C_in, k, k] with k odd.
        b: Bias [C_out] or None.
        stride: Step between windows.
        pad: Zero padding on every side.

    Returns:
        Output [N, C_out, H', W'] (or [C_out, H', W'] for a 3-D input).

    Raises:
        ContractViolation: On any shape mismatch; the message carries all shapes.
    """
    squeeze = x.ndim == 3
    if squeeze:
        x = x.reshape((1, *x.shape))

    shapes = f"x={x.shape}, w={w.shape}, b={None if b is None else b.shape}, stride={stride}, pad={pad}"
    if x.ndim != 4 or w.ndim != 4:
        raise ContractViolation(f"conv2d expects 4-D input and kernels: {shapes}")
    n, c_in, h, width = x.shape
    c_out, w_in, kh, kw = w.shape
    if w_in != c_in or kh != kw or kh % 2 == 0:
        raise ContractViolation(f"conv2d needs matching channels and an odd square kernel: {shapes}")
    if b is not None and b.shape != (c_out,):
        raise ContractViolation(f"conv2d bias must be [C_out]: {shapes}")
    if stride < 1 or pad < 0:
        raise ContractViolation(f"conv2d needs stride >= 1 and pad >= 0: {shapes}")
    k = kh
    ho, wo = conv_output_size(h, k, stride, pad), conv_output_size(width, k, stride, pad)
    if ho < 1 or wo < 1:
        raise ContractViolation(f"conv2d output would be empty: {shapes}")

    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    windows = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::stride, ::stride][:, :, :ho, :wo]
    out = np.tensordot(windows, w.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    if b is not None:
        out = out + b.data[None, :, None, None]
    out = np.ascontiguousarray(out)
    xp_shape = xp.shape

    def backward(g):
        gw = np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))
        gcols = np.tensordot(g, w.data, axes=([1], [0]))  # [N, Ho, Wo, C_in, k, k]
        gxp = np.zeros(xp_shape, dtype=g.dtype)
        for i in range(k):
            for j in range(k):
                gxp[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += gcols[
                    :, :, :, :, i, j
                ].transpose(0, 3, 1, 2)
        gx = gxp[:, :, pad : pad + h, pad : pad + width]
        gb = g.sum(axis=(0, 2, 3)) if b is not None else None
        return (gx, gw, gb) if b is not None else (gx, gw)

    inputs = (x, w, b) if b is not None else (x, w)
    result = Tensor.from_op(out, "conv2d", inputs, backward)
    if squeeze:
        result = result.reshape(result.shape[1:])
    return result


def upsample_nearest(x: Tensor, factor: int) -> Tensor:
    """Repeat every pixel `factor` times along the last two axes."""
    if factor < 1:
        raise ContractViolation(f"Upsampling factor must be >= 1, got {factor}")
    if factor == 1:
        return x
    out = np.repeat(np.repeat(x.data, factor, axis=-2), factor, axis=-1)
    lead, (h, w) = x.shape[:-2], x.shape[-2:]

    def backward(g):
        return (g.reshape(*lead, h, factor, w, factor).sum(axis=(-3, -1)),)

    return Tensor.from_op(out, "upsample_nearest", (x,), backward)


def leaky_relu(x: Tensor, slope: float = 0.1) -> Tensor:
    positive = x.data > 0
    out = np.where(positive, x.data, slope * x.data).astype(x.dtype, copy=False)
    return Tensor.from_op(
        out, "leaky_relu", (x,), lambda g: (np.where(positive, g, slope * g),)
    )


def softmax_over_classes(logits: Tensor, axis: int = -3) -> Tensor:
    """Softmax across the class axis, independently at every cell."""
    shifted = logits.data - logits.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return Tensor.from_op(y, "softmax", (logits,), backward)


def mix_rows(x: Tensor, a: Tensor, b: Tensor) -> Tensor:
    """Per-channel learned linear map over rows.

    y[n, c, o, w] = sum_h a[c, o, h] * x[n, c, h, w] + b[c, o]

    Args:
        x: Features [N, C, H, W].
        a: Mixing weights [C, H_out, H].
        b: Bias [C, H_out].
    """
    if a.ndim != 3 or a.shape[0] != x.shape[1] or a.shape[2] != x.shape[2] or b.shape != a.shape[:2]:
        raise ContractViolation(f"mix_rows shapes do not match: x={x.shape}, a={a.shape}, b={b.shape}")
    out = np.einsum("coh,nchw->ncow", a.data, x.data) + b.data[None, :, :, None]

    def backward(g):
        return (
            np.einsum("coh,ncow->nchw", a.data, g),
            np.einsum("ncow,nchw->coh", g, x.data),
            g.sum(axis=(0, 3)),
        )

    return Tensor.from_op(out, "mix_rows", (x, a, b), backward)


def mix_cols(x: Tensor, a: Tensor, b: Tensor) -> Tensor:
    """Per-channel learned linear map over columns.

    y[n, c, h, o] = sum_w a[c, o, w] * x[n, c, h, w] + b[c, o]
    """
    if a.ndim != 3 or a.shape[0] != x.shape[1] or a.shape[2] != x.shape[3] or b.shape != a.shape[:2]:
        raise ContractViolation(f"mix_cols shapes do not match: x={x.shape}, a={a.shape}, b={b.shape}")
    out = np.einsum("cow,nchw->ncho", a.data, x.data) + b.data[None, :, None, :]

    def backward(g):
        return (
            np.einsum("cow,ncho->nchw", a.data, g),
            np.einsum("ncho,nchw->cow", g, x.data),
            g.sum(axis=(0, 2)),
        )

    return Tensor.from_op(out, "mix_cols", (x, a, b), backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    return Tensor.from_op(out, "concat", tuple(tensors), lambda g: np.split(g, splits, axis=axis))


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    out = np.stack([t.data for t in tensors], axis=axis)
    count = len(tensors)

    def backward(g):
        return [np.take(g, i, axis=axis) for i in range(count)]

    return Tensor.from_op(out, "stack", tuple(tensors), backward)
