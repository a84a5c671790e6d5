"""Procedural rack scene generator.

Each shelf draws a target occupancy and fills itself left to right with box
stacks, so shelves range from empty to packed. Every shelf and the clutter
rack draw from their own substream of the scene seed, which keeps a shelf
reproducible on its own.
"""

from __future__ import annotations

import logging
import math

from src.errors import ConfigError
from src.scene.models import (
    BoxSpec,
    Cuboid,
    SceneConfig,
    SceneDescription,
    Shelf,
    Stack,
    rack_structure,
    rotated_extent,
)
from src.scene.rng import CLUTTER_STREAM, SHELF_STREAM, SplitMix64, derive_seed

logger = logging.getLogger(__name__)

EPS = 1e-9


def validate_catalog(cfg: SceneConfig) -> None:
    """Reject configs where some catalog box cannot stand on a shelf.

    Raises:
        ConfigError: If a box is wider or deeper than the shelf, or taller than
            the clear height between two shelves.
    """
    for spec in cfg.box_catalog:
        if spec.width_m >= cfg.shelf_width_m or spec.depth_m >= cfg.shelf_depth_m:
            raise ConfigError(
                f"Box '{spec.name}' ({spec.width_m} x {spec.depth_m} m) does not fit on a "
                f"{cfg.shelf_width_m} x {cfg.shelf_depth_m} m shelf"
            )
        if spec.height_m > cfg.clear_height_m + EPS:
            raise ConfigError(
                f"Box '{spec.name}' is {spec.height_m} m tall, clear height is "
                f"{cfg.clear_height_m} m"
            )


def _max_layers(spec: BoxSpec, cfg: SceneConfig) -> int:
    return max(1, min(cfg.max_stack_layers, math.floor(cfg.clear_height_m / spec.height_m + EPS)))


def place_stacks(
    shelf_width_m: float,
    shelf_depth_m: float,
    cfg: SceneConfig,
    rng: SplitMix64,
    occupancy: float = 1.0,
) -> list[Stack]:
    """Fill one shelf with stacks in a single row along its width.

    Stacks are drafted left to right. A draft picks a random box, yaw and
    layer count; it is retried up to `cfg.max_placement_attempts` times until
    its rotated x-extent fits both the remaining width (with `min_gap_m`
    between neighbours) and the occupancy budget `occupancy * shelf_width_m`.
    The shelf is closed at the first draft that never fits. Leftover width is
    then scattered into the gaps at random and each stack gets a random depth
    offset inside the shelf.

    Args:
        shelf_width_m: Shelf extent along x.
        shelf_depth_m: Shelf extent along z.
        cfg: Scene parameters (catalog, gap, rotation, layer and attempt limits).
        rng: Generator owned by this shelf.
        occupancy: Fraction of the shelf width that stacks may cover.

    Returns:
        Stacks in the shelf frame, ordered by x.
    """
    budget = occupancy * shelf_width_m
    drafts: list[tuple[BoxSpec, float, int, float, float]] = []
    span = 0.0
    used = 0.0

    while True:
        placed = False
        for _ in range(cfg.max_placement_attempts):
            spec = rng.choice(cfg.box_catalog)
            yaw = rng.uniform(-cfg.rot_amplitude_deg, cfg.rot_amplitude_deg) if cfg.rot_amplitude_deg > 0 else 0.0
            ex, ez = rotated_extent(spec.width_m, spec.depth_m, yaw)
            gap = cfg.min_gap_m if drafts else 0.0
            if span + gap + ex > shelf_width_m + EPS:
                continue
            if used + ex > budget + EPS:
                continue
            if ez > shelf_depth_m + EPS:
                continue
            layers = rng.randint(1, _max_layers(spec, cfg))
            drafts.append((spec, yaw, layers, ex, ez))
            span += gap + ex
            used += ex
            placed = True
            break
        if not placed:
            break

    if not drafts:
        return []

    spare = max(0.0, shelf_width_m - span)
    cuts = sorted(rng.uniform(0.0, spare) for _ in drafts)
    stacks = []
    prefix = 0.0
    for cut, (spec, yaw, layers, ex, ez) in zip(cuts, drafts, strict=True):
        left = -shelf_width_m / 2 + cut + prefix
        slack = max(0.0, (shelf_depth_m - ez) / 2)
        stacks.append(
            Stack(
                spec=spec,
                center_x_m=left + ex / 2,
                center_z_m=rng.uniform(-slack, slack),
                yaw_deg=yaw,
                layers=layers,
            )
        )
        prefix += ex + cfg.min_gap_m
    return stacks


def _clutter(cfg: SceneConfig, seed: int, center_x_m: float, center_z_m: float) -> list[Cuboid]:
    """A fully stocked distractor rack behind the primary one."""
    rng = SplitMix64(derive_seed(seed, CLUTTER_STREAM))
    items = rack_structure(cfg, center_x_m, center_z_m, kind_prefix="clutter")
    for i in range(cfg.num_shelves):
        for stack in place_stacks(cfg.shelf_width_m, cfg.shelf_depth_m, cfg, rng):
            items.append(
                Cuboid(
                    kind="clutter",
                    center_x_m=center_x_m + stack.center_x_m,
                    base_y_m=cfg.shelf_height(i),
                    center_z_m=center_z_m + stack.center_z_m,
                    width_m=stack.spec.width_m,
                    height_m=stack.height_m,
                    depth_m=stack.spec.depth_m,
                    yaw_deg=stack.yaw_deg,
                    color_id=stack.spec.color_id,
                )
            )
    return items


def generate_scene(cfg: SceneConfig, seed: int) -> SceneDescription:
    """Generate one rack scene.

    Args:
        cfg: Scene parameters.
        seed: 64-bit scene seed.

    Returns:
        The scene. Identical for identical (cfg, seed).

    Raises:
        ConfigError: If a catalog box cannot fit on a shelf.
    """
    validate_catalog(cfg)

    shelves = []
    for i in range(cfg.num_shelves):
        rng = SplitMix64(derive_seed(seed, SHELF_STREAM, i))
        occupancy = rng.random() * cfg.density if cfg.randomize_occupancy else cfg.density
        stacks = place_stacks(cfg.shelf_width_m, cfg.shelf_depth_m, cfg, rng, occupancy=occupancy)
        shelves.append(Shelf(index=i, height_m=cfg.shelf_height(i), occupancy=occupancy, stacks=stacks))

    clutter: list[Cuboid] = []
    if cfg.background_clutter:
        pose = cfg.rack_pose
        clutter = _clutter(
            cfg,
            seed,
            pose.x_m,
            pose.z_m + cfg.shelf_depth_m + cfg.clutter_offset_m + cfg.shelf_depth_m / 2,
        )

    scene = SceneDescription(
        seed=seed & ((1 << 64) - 1),
        config=cfg,
        rack_pose=cfg.rack_pose,
        shelves=shelves,
        clutter=clutter,
    )
    logger.debug(f"Generated scene seed={seed} with {scene.stack_count} stacks")
    return scene
