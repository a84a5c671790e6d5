"""Default box and crate catalog.

Six cardboard box sizes and two crate sizes. Every dimension is a multiple of
12.5 cm, footprint sides are at least 0.5 m and heights at least 0.375 m, so
on the default layout grid (8 m over 64 cells) a single box covers at least
three cells on every axis and survives a radius-1 opening.
"""

from src.scene.models import BoxSpec

DEFAULT_CATALOG: tuple[BoxSpec, ...] = (
    BoxSpec(name="box-a", width_m=0.500, depth_m=0.500, height_m=0.375, color_id=0),
    BoxSpec(name="box-b", width_m=0.625, depth_m=0.500, height_m=0.375, color_id=1),
    BoxSpec(name="box-c", width_m=0.500, depth_m=0.625, height_m=0.500, color_id=2),
    BoxSpec(name="box-d", width_m=0.750, depth_m=0.500, height_m=0.375, color_id=3),
    BoxSpec(name="box-e", width_m=0.625, depth_m=0.625, height_m=0.500, color_id=4),
    BoxSpec(name="box-f", width_m=0.750, depth_m=0.625, height_m=0.625, color_id=5),
    BoxSpec(name="crate-a", width_m=0.875, depth_m=0.625, height_m=0.375, color_id=6, kind="crate"),
    BoxSpec(name="crate-b", width_m=1.000, depth_m=0.750, height_m=0.500, color_id=7, kind="crate"),
)


def default_catalog() -> list[BoxSpec]:
    """Fresh list of the default catalog entries."""
    return list(DEFAULT_CATALOG)
