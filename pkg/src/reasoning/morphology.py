"""Binary morphology and connected components on layout grids.

Morphology treats the grid as a window onto an infinite plane that is empty
outside it: the grid is padded, processed and cropped back. That keeps
opening and closing idempotent at the border.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage as ndi

from src.errors import ContractViolation

FOUR_CONNECTED = ndi.generate_binary_structure(2, 1)


def _square(radius: int) -> np.ndarray:
    if radius < 0:
        raise ContractViolation(f"Structuring element radius must be >= 0, got {radius}")
    return np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)


def morph_open(grid: np.ndarray, radius: int) -> np.ndarray:
    """Erosion then dilation with a (2r+1)-square."""
    structure = _square(radius)
    grid = np.asarray(grid, dtype=bool)
    if radius == 0:
        return grid.copy()
    padded = np.pad(grid, radius)
    opened = ndi.binary_dilation(ndi.binary_erosion(padded, structure), structure)
    return opened[radius:-radius, radius:-radius]


def morph_close(grid: np.ndarray, radius: int) -> np.ndarray:
    """Dilation then erosion with a (2r+1)-square."""
    structure = _square(radius)
    grid = np.asarray(grid, dtype=bool)
    if radius == 0:
        return grid.copy()
    padded = np.pad(grid, radius)
    closed = ndi.binary_erosion(ndi.binary_dilation(padded, structure), structure, border_value=1)
    return closed[radius:-radius, radius:-radius]


def connected_components(grid: np.ndarray) -> tuple[np.ndarray, int]:
    """4-connected labelling; components are numbered 1..n in row-major first-touch order."""
    labels, count = ndi.label(np.asarray(grid, dtype=bool), structure=FOUR_CONNECTED)
    return labels, int(count)
