"""Rack report: per-shelf cuboids, free volume and stack counts."""

from __future__ import annotations

import logging

from pydantic import BaseModel, Field

from src.layout.grid import LayoutTensor, View
from src.metrics.evaluation import LayoutClass
from src.reasoning.fusion import (
    Cuboid,
    FusionResult,
    ShelfGeometry,
    extract_rects,
    fuse_views,
    shelf_free_volume,
)
from src.render.image import Image
from src.render.viz import layout_panel, overlay_rects

logger = logging.getLogger(__name__)

REPORT_VERSION = 1


class ShelfReport(BaseModel):
    index: int
    stack_count: int
    width_cm: float
    depth_cm: float
    height_cm: float
    capacity_cm3: float
    free_cm3: float
    cuboids: list[Cuboid] = Field(default_factory=list)
    unmatched_top: int = 0
    unmatched_front: int = 0


class RackReport(BaseModel):
    """Fused reconstruction of every shelf seen in the layouts."""

    version: int = REPORT_VERSION
    shelf_count: int
    shelves: list[ShelfReport] = Field(default_factory=list)

    @property
    def total_stacks(self) -> int:
        return sum(s.stack_count for s in self.shelves)

    @property
    def total_free_cm3(self) -> float:
        return sum(s.free_cm3 for s in self.shelves)

    def sentence(self) -> str:
        return (
            f"Rack has {self.shelf_count} shelves, {self.total_stacks} box stacks, "
            f"and {self.total_free_cm3:.0f} cm³ of free space available"
        )


def measure_shelf(top: LayoutTensor, front: LayoutTensor, shelf: int) -> ShelfGeometry | None:
    """Shelf size from the largest rack rectangles of both views, None if absent."""
    scale = top.scale_cm
    top_racks = extract_rects(top.cells[shelf], LayoutClass.RACK, View.TOP, shelf)
    front_racks = extract_rects(front.cells[shelf], LayoutClass.RACK, View.FRONT, shelf)
    if not top_racks or not front_racks:
        return None
    footprint = max(top_racks, key=lambda r: (r.area, -r.min_u))
    slab = max(front_racks, key=lambda r: (r.area, -r.min_u))
    return ShelfGeometry(
        width_cm=footprint.width * scale,
        depth_cm=footprint.height * scale,
        height_cm=slab.height * scale,
    )


def reason_shelf(
    top: LayoutTensor, front: LayoutTensor, shelf: int, geometry: ShelfGeometry
) -> tuple[ShelfReport, FusionResult]:
    top_rects = extract_rects(top.cells[shelf], LayoutClass.BOX, View.TOP, shelf)
    front_rects = extract_rects(front.cells[shelf], LayoutClass.BOX, View.FRONT, shelf)
    fused = fuse_views(top_rects, front_rects, top.scale_cm, top.grid_size, geometry)
    capacity, free = shelf_free_volume(fused.cuboids, geometry.width_cm, geometry.depth_cm, geometry.height_cm)
    report = ShelfReport(
        index=shelf,
        stack_count=len(fused.cuboids),
        width_cm=geometry.width_cm,
        depth_cm=geometry.depth_cm,
        height_cm=geometry.height_cm,
        capacity_cm3=capacity,
        free_cm3=free,
        cuboids=fused.cuboids,
        unmatched_top=len(fused.unmatched_top),
        unmatched_front=len(fused.unmatched_front),
    )
    return report, fused


def reason_layouts(
    top: LayoutTensor,
    front: LayoutTensor,
    geometry: dict[int, ShelfGeometry] | None = None,
) -> tuple[RackReport, dict[int, FusionResult]]:
    """Reconstruct every shelf present in both layouts.

    Args:
        top: Top-view layout (ground truth or prediction).
        front: Front-view layout of the same image.
        geometry: Known shelf sizes per channel; measured from the layouts
            where missing.

    Returns:
        The report and the fusion details per shelf.
    """
    geometry = geometry or {}
    shelves: list[ShelfReport] = []
    fusions: dict[int, FusionResult] = {}
    for shelf in range(top.num_channels):
        shape = geometry.get(shelf) or measure_shelf(top, front, shelf)
        if shape is None:
            continue
        report, fused = reason_shelf(top, front, shelf, shape)
        if fused.unmatched_top or fused.unmatched_front:
            logger.debug(
                f"Shelf {shelf}: {len(fused.unmatched_top)} top and "
                f"{len(fused.unmatched_front)} front rectangles left unmatched"
            )
        shelves.append(report)
        fusions[shelf] = fused
    return RackReport(shelf_count=len(shelves), shelves=shelves), fusions


def render_overlay(
    top: LayoutTensor, front: LayoutTensor, fusions: dict[int, FusionResult], scale: int = 2
) -> Image:
    """Layout panel with every fused pair drawn as a wireframe."""
    panel = layout_panel(top, front, scale=scale)
    rects = [rect for fused in fusions.values() for pair in fused.matches for rect in pair]
    return overlay_rects(panel, rects, top.num_channels, top.grid_size, scale=scale)
