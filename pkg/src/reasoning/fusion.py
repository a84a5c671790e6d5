"""Rectangle extraction and top/front view fusion.

Grid coordinates: u is the column, v the row, and rectangle maxima are
exclusive. Top-view rows run from the far edge (v = 0) towards the camera;
front-view rows run downwards with the shelf surface at v = D/2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import ndimage as ndi

from src.layout.grid import View
from src.metrics.evaluation import LayoutClass
from src.reasoning.morphology import connected_components, morph_open

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Rect:
    """Axis-aligned bounding rectangle of one connected component.

    Attributes:
        view: Layout view.
        shelf: Shelf channel.
        min_u, min_v: Inclusive lower corner (column, row).
        max_u, max_v: Exclusive upper corner.
        area: Cells in the component.
    """

    view: View
    shelf: int
    min_u: int
    min_v: int
    max_u: int
    max_v: int
    area: int = 0

    @property
    def width(self) -> int:
        return self.max_u - self.min_u

    @property
    def height(self) -> int:
        return self.max_v - self.min_v


@dataclass(frozen=True)
class ShelfGeometry:
    """Metric shelf dimensions used for capacity."""

    width_cm: float
    depth_cm: float
    height_cm: float


class Cuboid(BaseModel):
    """A reconstructed stack, in centimetres relative to the grid centre.

    x runs along the shelf, z into the rack. The footprint is the matched
    top rectangle, so a rotated stack is counted at its bounding box.
    """

    model_config = ConfigDict(frozen=True)

    shelf: int
    x_min_cm: float
    x_max_cm: float
    z_min_cm: float
    z_max_cm: float
    height_cm: float
    footprint_cm2: float

    @property
    def width_cm(self) -> float:
        return self.x_max_cm - self.x_min_cm

    @property
    def depth_cm(self) -> float:
        return self.z_max_cm - self.z_min_cm

    @property
    def volume_cm3(self) -> float:
        return self.footprint_cm2 * self.height_cm


@dataclass
class FusionResult:
    cuboids: list[Cuboid] = field(default_factory=list)
    matches: list[tuple[Rect, Rect]] = field(default_factory=list)
    unmatched_top: list[Rect] = field(default_factory=list)
    unmatched_front: list[Rect] = field(default_factory=list)


def extract_rects(
    channel: np.ndarray, layout_class: LayoutClass, view: View = View.TOP, shelf: int = 0
) -> list[Rect]:
    """Bounding rectangles of the class's components after opening with radius 1."""
    mask = morph_open(layout_class.mask(np.asarray(channel)), 1)
    labels, count = connected_components(mask)
    rects = []
    for index, slices in enumerate(ndi.find_objects(labels), start=1):
        if slices is None:
            continue
        rows, cols = slices
        area = int(np.count_nonzero(labels[slices] == index))
        rects.append(Rect(View(view), shelf, cols.start, rows.start, cols.stop, rows.stop, area))
    logger.debug(f"{view} shelf {shelf}: {count} {layout_class.value} components")
    return rects


def count_stacks(channel: np.ndarray) -> int:
    """Number of occupied components after opening with radius 1."""
    _, count = connected_components(morph_open(LayoutClass.BOX.mask(np.asarray(channel)), 1))
    return count


def interval_overlap(a: Rect, b: Rect) -> float:
    """Intersection over union of the column intervals of two rectangles."""
    inter = min(a.max_u, b.max_u) - max(a.min_u, b.min_u)
    if inter <= 0:
        return 0.0
    union = max(a.max_u, b.max_u) - min(a.min_u, b.min_u)
    return inter / union


def fuse_views(
    top_rects: list[Rect],
    front_rects: list[Rect],
    scale_cm: float,
    grid_size: int,
    geometry: ShelfGeometry | None = None,
) -> FusionResult:
    """Pair top and front rectangles of one shelf into cuboids.

    Pairs are taken greedily by decreasing column-interval overlap; ties go
    to the leftmost top rectangle, then the leftmost front one. A pair yields
    the footprint of the top rectangle and the height of the front one.

    Args:
        top_rects: Box rectangles from the top view.
        front_rects: Box rectangles from the front view.
        scale_cm: Centimetres per cell.
        grid_size: Grid side D.
        geometry: When given, heights are capped at the shelf's clear height.

    Returns:
        Cuboids in top-rectangle order plus the unmatched rectangles.
    """
    candidates = [
        (interval_overlap(t, f), t.min_u, f.min_u, i, j)
        for i, t in enumerate(top_rects)
        for j, f in enumerate(front_rects)
    ]
    candidates = sorted((c for c in candidates if c[0] > 0), key=lambda c: (-c[0], c[1], c[2], c[3], c[4]))

    used_top: set[int] = set()
    used_front: set[int] = set()
    pairs: list[tuple[int, int]] = []
    for _, _, _, i, j in candidates:
        if i in used_top or j in used_front:
            continue
        used_top.add(i)
        used_front.add(j)
        pairs.append((i, j))
    pairs.sort()

    half = grid_size / 2
    result = FusionResult()
    for i, j in pairs:
        top, front = top_rects[i], front_rects[j]
        height = front.height * scale_cm
        if geometry is not None:
            height = min(height, geometry.height_cm)
        result.cuboids.append(
            Cuboid(
                shelf=top.shelf,
                x_min_cm=(top.min_u - half) * scale_cm,
                x_max_cm=(top.max_u - half) * scale_cm,
                z_min_cm=(half - top.max_v) * scale_cm,
                z_max_cm=(half - top.min_v) * scale_cm,
                height_cm=height,
                footprint_cm2=top.width * top.height * scale_cm * scale_cm,
            )
        )
        result.matches.append((top, front))
    result.unmatched_top = [r for k, r in enumerate(top_rects) if k not in used_top]
    result.unmatched_front = [r for k, r in enumerate(front_rects) if k not in used_front]
    return result


def shelf_free_volume(
    cuboids: list[Cuboid], width_cm: float, depth_cm: float, height_cm: float
) -> tuple[float, float]:
    """(capacity, free) in cm^3; free is clamped at zero."""
    capacity = width_cm * depth_cm * height_cm
    used = sum(c.volume_cm3 for c in cuboids)
    return capacity, max(0.0, capacity - used)
