"""Layout grid types and cell geometry.

A layout is an R x D x D label grid per view, one channel per shelf (bottom
shelf first), centred on the rack footprint. Cell (r, c) of the top view
samples the shelf plane at x = -E/2 + (c + 1/2)s, z = E/2 - (r + 1/2)s
relative to the footprint centre, so row 0 is the far edge. The front view
shares the columns; row r samples the height (D/2 - r - 1/2)s above the
shelf's top surface.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat

from src.errors import ContractViolation


class View(str, Enum):
    TOP = "top"
    FRONT = "front"


class Label(IntEnum):
    BACKGROUND = 0
    UNOCCUPIED = 1
    OCCUPIED = 2


NUM_CLASSES = len(Label)


class LayoutConfig(BaseModel):
    """Layout grid parameters.

    Attributes:
        max_shelves: Channel count R.
        grid_size: Grid side D in cells.
        extent_m: Metric side of the grid.
        range_m: Detection range d from the camera.
    """

    model_config = ConfigDict(frozen=True)

    max_shelves: int = Field(4, ge=1)
    grid_size: int = Field(64, ge=2)
    extent_m: PositiveFloat = 8.0
    range_m: PositiveFloat = 5.0

    def window(self) -> DetectionWindow:
        return DetectionWindow(range_m=self.range_m, extent_m=self.extent_m)

    @property
    def cell_m(self) -> float:
        return self.extent_m / self.grid_size


@dataclass(frozen=True)
class DetectionWindow:
    """Range of detection and the square region of interest around the rack."""

    range_m: float
    extent_m: float

    def __post_init__(self):
        if self.range_m <= 0 or self.extent_m <= 0:
            raise ContractViolation(
                f"Detection window needs positive range and extent, got {self.range_m}, {self.extent_m}"
            )


def metric_scale(extent_m: float, grid_size: int) -> float:
    """Centimetres per layout cell.

    Raises:
        ContractViolation: If grid_size is not positive.
    """
    if grid_size <= 0:
        raise ContractViolation(f"Grid size must be positive, got {grid_size}")
    return 100.0 * extent_m / grid_size


def column_centers(extent_m: float, grid_size: int) -> np.ndarray:
    """Lateral offset of each column centre from the footprint centre."""
    s = extent_m / grid_size
    return -extent_m / 2 + (np.arange(grid_size) + 0.5) * s


def row_depths(extent_m: float, grid_size: int) -> np.ndarray:
    """Depth offset (into the rack) of each top-view row centre."""
    s = extent_m / grid_size
    return extent_m / 2 - (np.arange(grid_size) + 0.5) * s


def row_heights(extent_m: float, grid_size: int) -> np.ndarray:
    """Height above the shelf surface of each front-view row centre."""
    s = extent_m / grid_size
    return (grid_size / 2 - np.arange(grid_size) - 0.5) * s


@dataclass
class LayoutTensor:
    """Per-shelf label grids for one view.

    Attributes:
        view: Top or front.
        cells: uint8 labels [R, D, D].
        extent_m: Metric side of every channel.
        origin: World (x, z) of the rack footprint centre the grid is anchored on.
        visible: Sorted indices of the shelves inside the detection window.
        shelf_heights_m: Height of each shelf surface, for front-view anchoring.
    """

    view: View
    cells: np.ndarray
    extent_m: float
    origin: tuple[float, float] = (0.0, 0.0)
    visible: list[int] = field(default_factory=list)
    shelf_heights_m: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.cells.ndim != 3 or self.cells.shape[1] != self.cells.shape[2]:
            raise ContractViolation(f"Layout cells must be [R, D, D], got {self.cells.shape}")
        self.view = View(self.view)

    @property
    def num_channels(self) -> int:
        return self.cells.shape[0]

    @property
    def grid_size(self) -> int:
        return self.cells.shape[1]

    @property
    def scale_cm(self) -> float:
        return metric_scale(self.extent_m, self.grid_size)

    def one_hot(self) -> np.ndarray:
        """Float32 encoding [R, 3, D, D]."""
        return np.moveaxis(np.eye(NUM_CLASSES, dtype=np.float32)[self.cells], -1, 1)
