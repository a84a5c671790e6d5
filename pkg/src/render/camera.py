"""Pinhole camera with a vertical image plane.

World frame: x right along the rack, y up, z away from the camera.
Camera frame: X right, Y down, Z forward (optical axis). Pitch and roll are
fixed at zero, so the image plane is always orthogonal to the ground; only
yaw about the vertical axis is free. Pixel (j, i) covers [j, j+1) x [i, i+1)
and its centre is (j + 0.5, i + 0.5).
"""

from __future__ import annotations

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, PositiveFloat, PositiveInt

from src.errors import BehindCameraError

Vec3 = tuple[float, float, float]


class CameraModel(BaseModel):
    """Intrinsics and pose of the capture camera."""

    model_config = ConfigDict(frozen=True)

    fx: PositiveFloat
    fy: PositiveFloat
    cx: float
    cy: float
    width: PositiveInt
    height: PositiveInt
    position: Vec3 = (0.0, 0.0, 0.0)
    yaw_deg: float = 0.0

    @property
    def pitch_deg(self) -> float:
        return 0.0

    @property
    def roll_deg(self) -> float:
        return 0.0

    @classmethod
    def from_focal(
        cls, focal_px: float, width: int, height: int, position: Vec3, yaw_deg: float = 0.0
    ) -> CameraModel:
        """Square-pixel camera with the principal point at the image centre."""
        return cls(
            fx=focal_px,
            fy=focal_px,
            cx=width / 2,
            cy=height / 2,
            width=width,
            height=height,
            position=position,
            yaw_deg=yaw_deg,
        )

    def basis(self) -> np.ndarray:
        """Rows are the camera right, down and forward axes in world coordinates."""
        yaw = math.radians(self.yaw_deg)
        c, s = math.cos(yaw), math.sin(yaw)
        return np.array([[c, 0.0, -s], [0.0, -1.0, 0.0], [s, 0.0, c]], dtype=np.float64)

    def world_to_camera(self, points: np.ndarray) -> np.ndarray:
        """Map world points [..., 3] into the camera frame."""
        offset = np.asarray(points, dtype=np.float64) - np.asarray(self.position, dtype=np.float64)
        return offset @ self.basis().T

    def camera_to_world(self, points: np.ndarray) -> np.ndarray:
        """Map camera-frame points [..., 3] back to world coordinates."""
        return np.asarray(points, dtype=np.float64) @ self.basis() + np.asarray(
            self.position, dtype=np.float64
        )

    def ray_directions(self) -> np.ndarray:
        """World-space (unnormalised) ray direction through every pixel centre, [H, W, 3]."""
        j = np.arange(self.width, dtype=np.float64) + 0.5
        i = np.arange(self.height, dtype=np.float64) + 0.5
        uu, vv = np.meshgrid(j, i)
        cam = np.stack([(uu - self.cx) / self.fx, (vv - self.cy) / self.fy, np.ones_like(uu)], axis=-1)
        return cam @ self.basis()


def project(cam: CameraModel, point: Vec3 | np.ndarray) -> tuple[float, float, float]:
    """Project one world point to pixel coordinates.

    Args:
        cam: Camera.
        point: World point (x, y, z).

    Returns:
        (u, v, depth) with u = fx*X/Z + cx, v = fy*Y/Z + cy and depth = Z.

    Raises:
        BehindCameraError: If Z <= 0.
    """
    x, y, z = (float(c) for c in cam.world_to_camera(np.asarray(point, dtype=np.float64)))
    if z <= 0:
        raise BehindCameraError(z)
    return cam.fx * x / z + cam.cx, cam.fy * y / z + cam.cy, z


def project_points(cam: CameraModel, points: np.ndarray) -> np.ndarray:
    """Vectorised projection of world points [N, 3] to [N, 3] rows of (u, v, Z).

    Points with Z <= 0 yield non-finite or meaningless u, v; callers clip first.
    """
    pc = cam.world_to_camera(points)
    z = pc[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = cam.fx * pc[..., 0] / z + cam.cx
        v = cam.fy * pc[..., 1] / z + cam.cy
    return np.stack([u, v, z], axis=-1)


def unproject(cam: CameraModel, u: float, v: float, depth: float) -> np.ndarray:
    """World point that projects to (u, v) at the given depth."""
    pc = np.array([(u - cam.cx) * depth / cam.fx, (v - cam.cy) * depth / cam.fy, depth])
    return cam.camera_to_world(pc)
