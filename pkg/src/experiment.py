"""Experiment configuration file.

One JSON document with a section per concern. Every field has a default, so
`{}` is a complete config.
"""

from __future__ import annotations

import json
from pathlib import Path

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from src.errors import ConfigError
from src.layout.grid import LayoutConfig
from src.model.network import ModelConfig, NetworkConfig
from src.model.trainer import TrainConfig
from src.scene.camera import CameraConfig
from src.scene.models import SceneConfig


class ExperimentConfig(BaseModel):
    """Scene, camera, layout, model and training settings of one experiment."""

    model_config = ConfigDict(frozen=True)

    scene: SceneConfig = SceneConfig()
    camera: CameraConfig = CameraConfig()
    layout: LayoutConfig = LayoutConfig()
    model: ModelConfig = ModelConfig()
    train: TrainConfig = TrainConfig()

    @model_validator(mode="after")
    def _check_capacity(self) -> ExperimentConfig:
        if self.scene.num_shelves > self.layout.max_shelves:
            raise ValueError(
                f"scene.num_shelves ({self.scene.num_shelves}) exceeds layout.max_shelves "
                f"({self.layout.max_shelves})"
            )
        return self

    def network_config(self) -> NetworkConfig:
        return NetworkConfig(
            **self.model.model_dump(),
            image_height=self.camera.image_height,
            image_width=self.camera.image_width,
            max_shelves=self.layout.max_shelves,
            grid_size=self.layout.grid_size,
        )

    def with_train(self, **changes) -> ExperimentConfig:
        """Copy with some training fields replaced (and re-validated)."""
        try:
            train = TrainConfig.model_validate({**self.train.model_dump(), **changes})
        except ValidationError as e:
            raise ConfigError(f"Invalid training settings: {e}") from e
        return self.model_copy(update={"train": train})


def load_experiment_config(path: Path | None) -> ExperimentConfig:
    """Read and validate a config file; None gives the defaults.

    Raises:
        ConfigError: If the file is unreadable or invalid.
    """
    if path is None:
        return ExperimentConfig()
    try:
        data = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config {path} is not valid JSON: {e}") from e
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid config {path}: {e}") from e


def write_experiment_config(path: Path, config: ExperimentConfig | None = None) -> None:
    config = config or ExperimentConfig()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(config.model_dump_json(indent=2))
