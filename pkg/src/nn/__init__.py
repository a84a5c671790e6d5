"""Reverse-mode differentiation on numpy arrays and the layers the layout network needs."""

from src.nn.tensor import Tensor, no_grad

__all__ = ["Tensor", "no_grad"]
