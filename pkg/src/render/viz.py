"""Color-coded layout visualisation.

Occupied cells are green, free shelf space dark blue and background pink.
A panel stacks one row per shelf (top shelf first) with the top view on the
left and the front view on the right. Tiles are separated by white gutters
GUTTER pixels wide; a panel of a single tile has none, so an empty layout
renders as one solid block.
"""

from __future__ import annotations

from collections.abc import Iterable
from typing import TYPE_CHECKING

import numpy as np
from PIL import Image as PILImage
from PIL import ImageDraw

from src.render.image import Image

if TYPE_CHECKING:
    from src.layout.grid import LayoutTensor
    from src.reasoning.fusion import Rect

BACKGROUND = (255, 192, 203)
UNOCCUPIED = (0, 0, 139)
OCCUPIED = (0, 176, 80)
SEPARATOR = (255, 255, 255)
WIREFRAME = (255, 215, 0)

PALETTE = np.array([BACKGROUND, UNOCCUPIED, OCCUPIED], dtype=np.uint8)
GUTTER = 2


def colorize(labels: np.ndarray) -> np.ndarray:
    """Map a label grid [D, D] in {0, 1, 2} to RGB [D, D, 3]."""
    return PALETTE[np.asarray(labels, dtype=np.intp)]


def cell_origin(shelf: int, column: int, num_shelves: int, grid_size: int, scale: int) -> tuple[int, int]:
    """Pixel (x, y) of the top-left corner of a shelf tile in a layout panel."""
    tile = grid_size * scale + GUTTER
    return column * tile, (num_shelves - 1 - shelf) * tile


def layout_panel(top: LayoutTensor, front: LayoutTensor | None = None, scale: int = 2) -> Image:
    """Render layouts as a grid of tiles.

    Args:
        top: Top-view layout.
        front: Optional front-view layout with the same shape.
        scale: Integer upscaling factor per cell.

    Returns:
        Panel image with `R` rows and one or two columns, gutters between tiles.
    """
    num_shelves, grid_size = top.cells.shape[0], top.cells.shape[-1]
    views = [top] if front is None else [top, front]
    tile = grid_size * scale + GUTTER
    width = tile * len(views) - GUTTER
    height = tile * num_shelves - GUTTER
    pixels = np.empty((height, width, 3), dtype=np.uint8)
    pixels[...] = np.asarray(SEPARATOR, dtype=np.uint8)
    for column, layout in enumerate(views):
        for shelf in range(num_shelves):
            x, y = cell_origin(shelf, column, num_shelves, grid_size, scale)
            block = np.kron(colorize(layout.cells[shelf]), np.ones((scale, scale, 1), dtype=np.uint8))
            pixels[y : y + grid_size * scale, x : x + grid_size * scale] = block
    return Image(width, height, pixels)


def overlay_rects(
    panel: Image, rects: Iterable[Rect], num_shelves: int, grid_size: int, scale: int = 2
) -> Image:
    """Draw rectangles (fused stacks) as wireframes on a layout panel."""
    canvas = PILImage.fromarray(panel.pixels, mode="RGB")
    draw = ImageDraw.Draw(canvas)
    for rect in rects:
        column = 0 if rect.view == "top" else 1
        x, y = cell_origin(rect.shelf, column, num_shelves, grid_size, scale)
        box = (
            x + rect.min_u * scale,
            y + rect.min_v * scale,
            x + rect.max_u * scale - 1,
            y + rect.max_v * scale - 1,
        )
        draw.rectangle(box, outline=WIREFRAME)
    pixels = np.asarray(canvas, dtype=np.uint8).copy()
    return Image(panel.width, panel.height, pixels)
