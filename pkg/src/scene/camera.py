"""Camera placement in front of the rack."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, model_validator

from src.render.camera import CameraModel
from src.scene.models import SceneConfig
from src.scene.rng import SplitMix64


class CameraConfig(BaseModel):
    """Capture camera intrinsics and pose sampling ranges.

    Distance is measured horizontally from the rack's front face; height is
    above the ground.
    """

    model_config = ConfigDict(frozen=True)

    image_width: PositiveInt = 128
    image_height: PositiveInt = 128
    focal_px: PositiveFloat = 110.0
    distance_range_m: tuple[PositiveFloat, PositiveFloat] = (1.2, 4.2)
    height_range_m: tuple[float, float] = (0.3, 3.6)
    lateral_range_m: float = Field(0.3, ge=0.0)
    yaw_range_deg: float = Field(0.0, ge=0.0, le=30.0)

    @model_validator(mode="after")
    def _check_ranges(self) -> CameraConfig:
        for name in ("distance_range_m", "height_range_m"):
            low, high = getattr(self, name)
            if low > high:
                raise ValueError(f"{name} must be (low, high), got ({low}, {high})")
        return self


def place_camera(
    scene_cfg: SceneConfig,
    cam_cfg: CameraConfig,
    distance_m: float,
    height_m: float,
    lateral_m: float = 0.0,
    yaw_deg: float = 0.0,
) -> CameraModel:
    """Camera facing the rack front from a given distance and height."""
    pose = scene_cfg.rack_pose
    return CameraModel.from_focal(
        cam_cfg.focal_px,
        cam_cfg.image_width,
        cam_cfg.image_height,
        position=(pose.x_m + lateral_m, height_m, pose.z_m - distance_m),
        yaw_deg=yaw_deg,
    )


def sample_camera(scene_cfg: SceneConfig, cam_cfg: CameraConfig, rng: SplitMix64) -> CameraModel:
    """Draw a camera pose uniformly inside the configured ranges.

    Pitch and roll are always zero.
    """
    distance = rng.uniform(*cam_cfg.distance_range_m)
    height = rng.uniform(*cam_cfg.height_range_m)
    lateral = rng.uniform(-cam_cfg.lateral_range_m, cam_cfg.lateral_range_m)
    yaw = rng.uniform(-cam_cfg.yaw_range_deg, cam_cfg.yaw_range_deg)
    return place_camera(scene_cfg, cam_cfg, distance, height, lateral, yaw)
