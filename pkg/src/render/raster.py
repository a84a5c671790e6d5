"""Z-buffered triangle rasterizer for flat-shaded cuboids.

Each visible cuboid face is clipped against the near plane, projected and
split into a triangle fan. Coverage uses f64 edge functions sampled at pixel
centres with a top-left fill rule, so a pixel on an edge shared by two
triangles belongs to exactly one of them. Depth is the perspective-correct
1/Z, interpolated linearly in screen space; a fragment wins only if it is
strictly nearer than what the buffer holds.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from src.render.camera import CameraModel
from src.render.image import Image
from src.scene.models import Cuboid, SceneDescription

logger = logging.getLogger(__name__)

BACKGROUND_COLOR = (200, 210, 220)
BOARD_COLOR = (150, 150, 155)
UPRIGHT_COLOR = (230, 120, 30)
BOX_COLORS = (
    (196, 155, 108),
    (181, 136, 90),
    (210, 180, 140),
    (160, 120, 80),
    (222, 196, 150),
    (170, 140, 100),
    (70, 110, 170),
    (60, 140, 90),
)

AMBIENT = 0.35
_LIGHT = np.array([-0.4, 0.8, -0.45])
LIGHT_DIRECTION = _LIGHT / np.linalg.norm(_LIGHT)
NEAR_PLANE = 0.05

# Corner indices of Cuboid.corners() forming each face, and the face name.
FACES = (
    ("bottom", (0, 1, 2, 3)),
    ("top", (4, 5, 6, 7)),
    ("front", (0, 1, 5, 4)),
    ("right", (1, 2, 6, 5)),
    ("back", (2, 3, 7, 6)),
    ("left", (3, 0, 4, 7)),
)


@dataclass
class RenderBuffers:
    """Everything one rasterization pass produces.

    Attributes:
        image: Shaded RGB image.
        inv_depth: 1/Z of the front-most surface per pixel, 0 for background.
        ids: Index of the front-most cuboid per pixel, -1 for background.
    """

    image: Image
    inv_depth: np.ndarray
    ids: np.ndarray


def base_color(cuboid: Cuboid) -> tuple[int, int, int]:
    if cuboid.kind == "board":
        return BOARD_COLOR
    if cuboid.kind == "upright":
        return UPRIGHT_COLOR
    return BOX_COLORS[cuboid.color_id % len(BOX_COLORS)]


def face_normals(cuboid: Cuboid) -> dict[str, np.ndarray]:
    """Outward unit normals of the six faces in world coordinates."""
    yaw = math.radians(cuboid.yaw_deg)
    c, s = math.cos(yaw), math.sin(yaw)
    u_axis = np.array([c, 0.0, s])
    v_axis = np.array([-s, 0.0, c])
    up = np.array([0.0, 1.0, 0.0])
    return {
        "bottom": -up,
        "top": up,
        "front": -v_axis,
        "right": u_axis,
        "back": v_axis,
        "left": -u_axis,
    }


def shade(color: tuple[int, int, int], normal: np.ndarray) -> np.ndarray:
    """Lambert shading with an ambient floor."""
    lambert = max(0.0, float(normal @ LIGHT_DIRECTION))
    intensity = AMBIENT + (1.0 - AMBIENT) * lambert
    return np.clip(np.round(np.asarray(color, dtype=np.float64) * intensity), 0, 255).astype(np.uint8)


def clip_near(polygon: list[np.ndarray], near: float = NEAR_PLANE) -> list[np.ndarray]:
    """Sutherland-Hodgman clip of a camera-space polygon against Z >= near."""
    out: list[np.ndarray] = []
    count = len(polygon)
    for k in range(count):
        cur, nxt = polygon[k], polygon[(k + 1) % count]
        cur_in, nxt_in = cur[2] >= near, nxt[2] >= near
        if cur_in:
            out.append(cur)
        if cur_in != nxt_in:
            t = (near - cur[2]) / (nxt[2] - cur[2])
            out.append(cur + t * (nxt - cur))
    return out


def _edge(ax: float, ay: float, bx: float, by: float, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


def _owns_edge(ax: float, ay: float, bx: float, by: float) -> bool:
    dx, dy = bx - ax, by - ay
    return dy < 0 or (dy == 0 and dx > 0)


class FrameBuffer:
    """Color, inverse-depth and id buffers of one rendering pass."""

    def __init__(self, width: int, height: int, background: tuple[int, int, int] = BACKGROUND_COLOR):
        self.width = width
        self.height = height
        self.color = np.empty((height, width, 3), dtype=np.uint8)
        self.color[...] = np.asarray(background, dtype=np.uint8)
        self.inv_depth = np.zeros((height, width), dtype=np.float64)
        self.ids = np.full((height, width), -1, dtype=np.int32)

    def draw_triangle(self, verts: np.ndarray, color: np.ndarray, object_id: int) -> None:
        """Rasterize one screen-space triangle.

        Args:
            verts: [3, 3] rows of (u, v, Z) with Z > 0.
            color: Shaded RGB color.
            object_id: Value written to the id buffer.
        """
        (x0, y0, z0), (x1, y1, z1), (x2, y2, z2) = verts.tolist()
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0:
            return
        if area < 0:
            x1, y1, z1, x2, y2, z2 = x2, y2, z2, x1, y1, z1
            area = -area

        j_lo = max(0, math.ceil(min(x0, x1, x2) - 0.5))
        j_hi = min(self.width - 1, math.floor(max(x0, x1, x2) - 0.5))
        i_lo = max(0, math.ceil(min(y0, y1, y2) - 0.5))
        i_hi = min(self.height - 1, math.floor(max(y0, y1, y2) - 0.5))
        if j_lo > j_hi or i_lo > i_hi:
            return

        px = np.arange(j_lo, j_hi + 1, dtype=np.float64)[None, :] + 0.5
        py = np.arange(i_lo, i_hi + 1, dtype=np.float64)[:, None] + 0.5

        w0 = _edge(x1, y1, x2, y2, px, py)
        w1 = _edge(x2, y2, x0, y0, px, py)
        w2 = _edge(x0, y0, x1, y1, px, py)
        inside = (
            ((w0 > 0) | ((w0 == 0) & _owns_edge(x1, y1, x2, y2)))
            & ((w1 > 0) | ((w1 == 0) & _owns_edge(x2, y2, x0, y0)))
            & ((w2 > 0) | ((w2 == 0) & _owns_edge(x0, y0, x1, y1)))
        )
        if not inside.any():
            return

        inv_z = (w0 / z0 + w1 / z1 + w2 / z2) / area
        window = (slice(i_lo, i_hi + 1), slice(j_lo, j_hi + 1))
        nearer = inside & (inv_z > self.inv_depth[window])
        self.inv_depth[window][nearer] = inv_z[nearer]
        self.ids[window][nearer] = object_id
        self.color[window][nearer] = color

    def draw_cuboid(self, cuboid: Cuboid, cam: CameraModel, object_id: int) -> None:
        """Rasterize every camera-facing face of a cuboid."""
        corners = np.asarray(cuboid.corners(), dtype=np.float64)
        cam_corners = cam.world_to_camera(corners)
        cam_pos = np.asarray(cam.position, dtype=np.float64)
        normals = face_normals(cuboid)
        color = base_color(cuboid)

        for name, idx in FACES:
            normal = normals[name]
            centroid = corners[list(idx)].mean(axis=0)
            if float(normal @ (cam_pos - centroid)) <= 0:
                continue
            polygon = clip_near([cam_corners[k] for k in idx])
            if len(polygon) < 3:
                continue
            screen = np.array(
                [[cam.fx * p[0] / p[2] + cam.cx, cam.fy * p[1] / p[2] + cam.cy, p[2]] for p in polygon]
            )
            shaded = shade(color, normal)
            for k in range(1, len(screen) - 1):
                self.draw_triangle(screen[[0, k, k + 1]], shaded, object_id)


def render_cuboids(cuboids: list[Cuboid], cam: CameraModel, width: int, height: int) -> RenderBuffers:
    """Render an explicit cuboid list. Ids index into `cuboids`."""
    fb = FrameBuffer(width, height)
    for object_id, cuboid in enumerate(cuboids):
        fb.draw_cuboid(cuboid, cam, object_id)
    return RenderBuffers(image=Image(width, height, fb.color), inv_depth=fb.inv_depth, ids=fb.ids)


def render_buffers(scene: SceneDescription, cam: CameraModel, width: int, height: int) -> RenderBuffers:
    """Render a scene; ids index into `scene.cuboids()`."""
    return render_cuboids(scene.cuboids(), cam, width, height)


def rasterize(scene: SceneDescription, cam: CameraModel, width: int, height: int) -> Image:
    """Flat-shaded rendering of every cuboid in the scene (rack, stacks, clutter).

    Args:
        scene: Scene to draw.
        cam: Camera; its intrinsics are used as given.
        width: Output width in pixels.
        height: Output height in pixels.

    Returns:
        The RGB image. Identical inputs give byte-identical images.
    """
    buffers = render_buffers(scene, cam, width, height)
    logger.debug(f"Rasterized scene seed={scene.seed} at {width}x{height}")
    return buffers.image
