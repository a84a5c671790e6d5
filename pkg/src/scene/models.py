"""Scene data models.

All lengths are meters and all angles degrees. Models are pydantic so scenes
and configs round-trip through JSON files unchanged.
"""

from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, model_validator

CuboidKind = Literal["board", "upright", "stack", "clutter"]


class BoxSpec(BaseModel):
    """One catalog item (cardboard box or crate)."""

    model_config = ConfigDict(frozen=True)

    name: str = ""
    width_m: PositiveFloat
    depth_m: PositiveFloat
    height_m: PositiveFloat
    color_id: int = Field(0, ge=0)
    kind: Literal["box", "crate"] = "box"


class RackPose(BaseModel):
    """Position of the rack's front face centre on the ground plane.

    The rack is axis-aligned with the world frame.
    """

    model_config = ConfigDict(frozen=True)

    x_m: float = 0.0
    z_m: float = 0.0


def _catalog_default() -> list[BoxSpec]:
    from src.scene.catalog import default_catalog

    return default_catalog()


class SceneConfig(BaseModel):
    """Parameters of the rack scene generator."""

    model_config = ConfigDict(frozen=True)

    num_shelves: int = Field(4, ge=1)
    shelf_width_m: PositiveFloat = 3.0
    shelf_depth_m: PositiveFloat = 1.0
    inter_shelf_height_m: PositiveFloat = 1.0
    shelf_thickness_m: PositiveFloat = 0.125
    bottom_shelf_height_m: PositiveFloat = 0.125
    upright_width_m: PositiveFloat = 0.08

    density: float = Field(1.0, ge=0.0, le=1.0)
    randomize_occupancy: bool = True
    max_stack_layers: int = Field(3, ge=1)
    min_gap_m: float = Field(0.25, ge=0.0)
    rot_amplitude_deg: float = Field(5.0, ge=0.0, le=45.0)
    max_placement_attempts: int = Field(16, ge=1)
    box_catalog: list[BoxSpec] = Field(default_factory=_catalog_default, min_length=1)

    background_clutter: bool = False
    clutter_offset_m: PositiveFloat = 7.5
    rack_pose: RackPose = RackPose()

    @model_validator(mode="after")
    def _check_heights(self) -> SceneConfig:
        if self.shelf_thickness_m >= self.inter_shelf_height_m:
            raise ValueError("shelf_thickness_m must be smaller than inter_shelf_height_m")
        if self.bottom_shelf_height_m < self.shelf_thickness_m:
            raise ValueError("bottom_shelf_height_m must be at least shelf_thickness_m")
        return self

    @property
    def clear_height_m(self) -> float:
        """Free height between a shelf top surface and the next shelf's underside."""
        return self.inter_shelf_height_m - self.shelf_thickness_m

    def shelf_height(self, index: int) -> float:
        """Height of shelf `index`'s top surface above the ground."""
        return self.bottom_shelf_height_m + index * self.inter_shelf_height_m

    def slab_height(self, index: int) -> float:
        """Vertical extent of the front-view slab above shelf `index`.

        Lower shelves end at the next board's underside; the topmost shelf has
        no board above it and uses the full inter-shelf height.
        """
        if index >= self.num_shelves - 1:
            return self.inter_shelf_height_m
        return self.clear_height_m

    def rack_height_m(self) -> float:
        return self.shelf_height(self.num_shelves - 1) + self.inter_shelf_height_m


def rotated_extent(width_m: float, depth_m: float, yaw_deg: float) -> tuple[float, float]:
    """Axis-aligned extent (x, z) of a width x depth rectangle rotated by yaw."""
    yaw = math.radians(yaw_deg)
    c, s = abs(math.cos(yaw)), abs(math.sin(yaw))
    return width_m * c + depth_m * s, width_m * s + depth_m * c


class Stack(BaseModel):
    """A coaxial pile of identical boxes, positioned in the shelf frame.

    The shelf frame has its origin at the centre of the shelf's top surface,
    x along the shelf width and z pointing into the rack.
    """

    model_config = ConfigDict(frozen=True)

    spec: BoxSpec
    center_x_m: float
    center_z_m: float
    yaw_deg: float = 0.0
    layers: int = Field(1, ge=1)

    @property
    def height_m(self) -> float:
        return self.layers * self.spec.height_m

    @property
    def volume_m3(self) -> float:
        return self.spec.width_m * self.spec.depth_m * self.height_m

    def extent(self) -> tuple[float, float]:
        """Axis-aligned footprint extent (x, z)."""
        return rotated_extent(self.spec.width_m, self.spec.depth_m, self.yaw_deg)

    def footprint_corners(self) -> list[tuple[float, float]]:
        """Footprint corners (x, z) in the shelf frame, counter-clockwise."""
        yaw = math.radians(self.yaw_deg)
        c, s = math.cos(yaw), math.sin(yaw)
        hw, hd = self.spec.width_m / 2, self.spec.depth_m / 2
        corners = []
        for u, v in ((-hw, -hd), (hw, -hd), (hw, hd), (-hw, hd)):
            corners.append((self.center_x_m + u * c - v * s, self.center_z_m + u * s + v * c))
        return corners


class Shelf(BaseModel):
    """One shelf level and the stacks standing on it."""

    model_config = ConfigDict(frozen=True)

    index: int = Field(ge=0)
    height_m: float
    occupancy: float = Field(ge=0.0, le=1.0)
    stacks: list[Stack] = Field(default_factory=list)


class Cuboid(BaseModel):
    """A world-space cuboid standing on its base.

    Attributes:
        center_x_m, center_z_m: Footprint centre on the ground plane.
        base_y_m: Height of the bottom face.
        width_m, height_m, depth_m: Extents along local x, y, z.
        yaw_deg: Rotation about the vertical axis.
    """

    model_config = ConfigDict(frozen=True)

    kind: CuboidKind
    center_x_m: float
    base_y_m: float
    center_z_m: float
    width_m: PositiveFloat
    height_m: PositiveFloat
    depth_m: PositiveFloat
    yaw_deg: float = 0.0
    color_id: int = 0

    def corners(self) -> list[tuple[float, float, float]]:
        """The eight corners, bottom face first (counter-clockwise seen from above)."""
        yaw = math.radians(self.yaw_deg)
        c, s = math.cos(yaw), math.sin(yaw)
        hw, hd = self.width_m / 2, self.depth_m / 2
        out = []
        for y in (self.base_y_m, self.base_y_m + self.height_m):
            for u, v in ((-hw, -hd), (hw, -hd), (hw, hd), (-hw, hd)):
                out.append((self.center_x_m + u * c - v * s, y, self.center_z_m + u * s + v * c))
        return out


class SceneDescription(BaseModel):
    """Full parametric world state of one generated scene."""

    model_config = ConfigDict(frozen=True)

    version: int = 1
    seed: int
    config: SceneConfig
    rack_pose: RackPose
    shelves: list[Shelf]
    clutter: list[Cuboid] = Field(default_factory=list)

    @property
    def footprint_center(self) -> tuple[float, float]:
        """World (x, z) of the rack footprint centre, the origin of every shelf frame."""
        return self.rack_pose.x_m, self.rack_pose.z_m + self.config.shelf_depth_m / 2

    @property
    def stack_count(self) -> int:
        return sum(len(shelf.stacks) for shelf in self.shelves)

    def rack_cuboids(self) -> list[Cuboid]:
        """Shelf boards followed by the four corner uprights."""
        return rack_structure(self.config, *self.footprint_center, kind_prefix="")

    def stack_cuboids(self, shelf: Shelf) -> list[Cuboid]:
        cx, cz = self.footprint_center
        return [
            Cuboid(
                kind="stack",
                center_x_m=cx + stack.center_x_m,
                base_y_m=shelf.height_m,
                center_z_m=cz + stack.center_z_m,
                width_m=stack.spec.width_m,
                height_m=stack.height_m,
                depth_m=stack.spec.depth_m,
                yaw_deg=stack.yaw_deg,
                color_id=stack.spec.color_id,
            )
            for stack in shelf.stacks
        ]

    def cuboids(self) -> list[Cuboid]:
        """Every renderable cuboid in a fixed order: rack, stacks bottom-up, clutter."""
        items = self.rack_cuboids()
        for shelf in self.shelves:
            items.extend(self.stack_cuboids(shelf))
        items.extend(self.clutter)
        return items


def rack_structure(
    cfg: SceneConfig, center_x_m: float, center_z_m: float, kind_prefix: str = ""
) -> list[Cuboid]:
    """Boards and uprights of a rack whose footprint is centred at (x, z).

    Args:
        cfg: Scene configuration providing the rack dimensions.
        center_x_m: Footprint centre x.
        center_z_m: Footprint centre z.
        kind_prefix: Empty for the primary rack; "clutter" tags every cuboid as
            clutter so it never reaches the ground truth.
    """
    board_kind = "clutter" if kind_prefix == "clutter" else "board"
    upright_kind = "clutter" if kind_prefix == "clutter" else "upright"
    items = [
        Cuboid(
            kind=board_kind,
            center_x_m=center_x_m,
            base_y_m=cfg.shelf_height(i) - cfg.shelf_thickness_m,
            center_z_m=center_z_m,
            width_m=cfg.shelf_width_m,
            height_m=cfg.shelf_thickness_m,
            depth_m=cfg.shelf_depth_m,
            color_id=0,
        )
        for i in range(cfg.num_shelves)
    ]
    uw = cfg.upright_width_m
    for sx in (-1.0, 1.0):
        for sz in (-1.0, 1.0):
            items.append(
                Cuboid(
                    kind=upright_kind,
                    center_x_m=center_x_m + sx * (cfg.shelf_width_m + uw) / 2,
                    base_y_m=0.0,
                    center_z_m=center_z_m + sz * (cfg.shelf_depth_m - uw) / 2,
                    width_m=uw,
                    height_m=cfg.rack_height_m(),
                    depth_m=uw,
                    color_id=1,
                )
            )
    return items
