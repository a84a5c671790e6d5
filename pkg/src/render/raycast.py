"""Brute-force ray caster used to verify the rasterizer.

One ray per pixel centre is intersected with every cuboid using the slab test
in the cuboid's local frame. Slow, but independent of the triangle pipeline.
"""

from __future__ import annotations

import math

import numpy as np

from src.render.camera import CameraModel
from src.render.raster import NEAR_PLANE
from src.scene.models import Cuboid


def ray_cuboid_depth(origin: np.ndarray, dirs: np.ndarray, cuboid: Cuboid) -> np.ndarray:
    """Entry parameter t of each ray into the cuboid, +inf on a miss.

    Args:
        origin: Ray origin [3] in world coordinates (outside the cuboid).
        dirs: Ray directions [..., 3] scaled so t equals camera depth Z.
        cuboid: Target cuboid.
    """
    yaw = math.radians(cuboid.yaw_deg)
    c, s = math.cos(yaw), math.sin(yaw)
    center = np.array([cuboid.center_x_m, cuboid.base_y_m + cuboid.height_m / 2, cuboid.center_z_m])
    # Local axes u (width), y (height), v (depth)
    axes = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    half = np.array([cuboid.width_m / 2, cuboid.height_m / 2, cuboid.depth_m / 2])

    o = axes @ (origin - center)
    d = dirs @ axes.T

    t_near = np.full(d.shape[:-1], -np.inf)
    t_far = np.full(d.shape[:-1], np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        for k in range(3):
            lo = (-half[k] - o[k]) / d[..., k]
            hi = (half[k] - o[k]) / d[..., k]
            parallel = d[..., k] == 0
            inside_slab = abs(o[k]) <= half[k]
            lo = np.where(parallel, np.where(inside_slab, -np.inf, np.inf), lo)
            hi = np.where(parallel, np.where(inside_slab, np.inf, -np.inf), hi)
            t_near = np.maximum(t_near, np.minimum(lo, hi))
            t_far = np.minimum(t_far, np.maximum(lo, hi))
    hit = (t_near <= t_far) & (t_near >= NEAR_PLANE)
    return np.where(hit, t_near, np.inf)


def raycast_ids(cuboids: list[Cuboid], cam: CameraModel) -> np.ndarray:
    """Index of the nearest cuboid hit through each pixel centre, -1 on a miss."""
    dirs = cam.ray_directions()
    origin = np.asarray(cam.position, dtype=np.float64)
    best = np.full((cam.height, cam.width), np.inf)
    ids = np.full((cam.height, cam.width), -1, dtype=np.int32)
    for object_id, cuboid in enumerate(cuboids):
        t = ray_cuboid_depth(origin, dirs, cuboid)
        nearer = t < best
        best[nearer] = t[nearer]
        ids[nearer] = object_id
    return ids
