"""Ground-truth layout generation from a scene and a camera.

Every cell is labelled by whether its centre lies inside a region, with
closed containment. Stacks are tested in their own rotated frame.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from src.errors import BehindCameraError, ContractViolation
from src.layout.grid import (
    DetectionWindow,
    Label,
    LayoutTensor,
    View,
    column_centers,
    row_depths,
    row_heights,
)
from src.render.camera import CameraModel, project
from src.scene.models import SceneDescription, Shelf, Stack

logger = logging.getLogger(__name__)


def shelf_front_point(scene: SceneDescription, index: int) -> tuple[float, float, float]:
    """World midpoint of shelf `index`'s front top edge."""
    return scene.rack_pose.x_m, scene.config.shelf_height(index), scene.rack_pose.z_m


def visible_shelf_set(scene: SceneDescription, cam: CameraModel, window: DetectionWindow) -> set[int]:
    """Shelves whose front edge midpoint is in the image and within range.

    Args:
        scene: Scene.
        cam: Capture camera.
        window: Detection window providing the range d.

    Returns:
        Indices of visible shelves.
    """
    visible = set()
    position = np.asarray(cam.position, dtype=np.float64)
    for shelf in scene.shelves:
        point = shelf_front_point(scene, shelf.index)
        try:
            u, v, _ = project(cam, point)
        except BehindCameraError:
            continue
        if not (0 <= u < cam.width and 0 <= v < cam.height):
            continue
        if float(np.linalg.norm(np.asarray(point) - position)) <= window.range_m:
            visible.add(shelf.index)
    return visible


def stack_mask(stack: Stack, xs: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """Cells whose centre lies inside the stack's rotated footprint.

    Args:
        stack: Stack in the shelf frame.
        xs: Column offsets [D].
        zs: Row depth offsets [D].

    Returns:
        Boolean mask [D, D].
    """
    yaw = math.radians(stack.yaw_deg)
    c, s = math.cos(yaw), math.sin(yaw)
    dx = xs[None, :] - stack.center_x_m
    dz = zs[:, None] - stack.center_z_m
    u = dx * c + dz * s
    v = -dx * s + dz * c
    return (np.abs(u) <= stack.spec.width_m / 2) & (np.abs(v) <= stack.spec.depth_m / 2)


def _check_capacity(scene: SceneDescription, max_shelves: int) -> None:
    if scene.config.num_shelves > max_shelves:
        raise ContractViolation(
            f"Scene has {scene.config.num_shelves} shelves, layout holds {max_shelves} channels"
        )


def _visible_channels(scene: SceneDescription, cam: CameraModel, window: DetectionWindow) -> list[Shelf]:
    visible = visible_shelf_set(scene, cam, window)
    return [shelf for shelf in scene.shelves if shelf.index in visible]


def _top_channel(scene: SceneDescription, shelf: Shelf, xs: np.ndarray, zs: np.ndarray) -> np.ndarray:
    cfg = scene.config
    channel = np.zeros((len(zs), len(xs)), dtype=np.uint8)
    footprint = (np.abs(zs)[:, None] <= cfg.shelf_depth_m / 2) & (
        np.abs(xs)[None, :] <= cfg.shelf_width_m / 2
    )
    channel[footprint] = Label.UNOCCUPIED
    for stack in shelf.stacks:
        channel[stack_mask(stack, xs, zs)] = Label.OCCUPIED
    return channel


def top_layout(
    scene: SceneDescription,
    cam: CameraModel,
    window: DetectionWindow,
    *,
    grid_size: int = 64,
    max_shelves: int = 4,
) -> LayoutTensor:
    """Top-view ground truth.

    Visible shelves get their footprint as unoccupied and stack footprints
    as occupied; every other channel is background.
    """
    _check_capacity(scene, max_shelves)
    xs = column_centers(window.extent_m, grid_size)
    zs = row_depths(window.extent_m, grid_size)
    cells = np.zeros((max_shelves, grid_size, grid_size), dtype=np.uint8)
    shelves = _visible_channels(scene, cam, window)
    for shelf in shelves:
        cells[shelf.index] = _top_channel(scene, shelf, xs, zs)
    return LayoutTensor(
        view=View.TOP,
        cells=cells,
        extent_m=window.extent_m,
        origin=scene.footprint_center,
        visible=[shelf.index for shelf in shelves],
        shelf_heights_m=[shelf.height_m for shelf in scene.shelves],
    )


def front_layout(
    scene: SceneDescription,
    cam: CameraModel,
    window: DetectionWindow,
    *,
    grid_size: int = 64,
    max_shelves: int = 4,
) -> LayoutTensor:
    """Front-view ground truth.

    The slab above each visible shelf is unoccupied across the shelf width.
    Each stack's front face is occupied up to the stack height, over the
    columns its top-view footprint covers.
    """
    _check_capacity(scene, max_shelves)
    cfg = scene.config
    xs = column_centers(window.extent_m, grid_size)
    zs = row_depths(window.extent_m, grid_size)
    hs = row_heights(window.extent_m, grid_size)
    cells = np.zeros((max_shelves, grid_size, grid_size), dtype=np.uint8)
    shelves = _visible_channels(scene, cam, window)
    for shelf in shelves:
        band_rows = (hs >= 0) & (hs <= cfg.slab_height(shelf.index))
        band_cols = np.abs(xs) <= cfg.shelf_width_m / 2
        channel = cells[shelf.index]
        channel[np.ix_(band_rows, band_cols)] = Label.UNOCCUPIED
        for stack in shelf.stacks:
            cols = stack_mask(stack, xs, zs).any(axis=0)
            rows = (hs >= 0) & (hs <= stack.height_m)
            channel[np.ix_(rows, cols)] = Label.OCCUPIED
    return LayoutTensor(
        view=View.FRONT,
        cells=cells,
        extent_m=window.extent_m,
        origin=scene.footprint_center,
        visible=[shelf.index for shelf in shelves],
        shelf_heights_m=[shelf.height_m for shelf in scene.shelves],
    )
