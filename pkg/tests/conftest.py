"""Pytest configuration and fixtures."""

import pytest
from click.testing import CliRunner

from src.experiment import ExperimentConfig
from src.layout.grid import LayoutConfig
from src.pipeline import run_gen
from src.scene.camera import CameraConfig
from src.scene.models import SceneConfig


@pytest.fixture
def runner():
    """Provide a Click CLI test runner."""
    return CliRunner()


@pytest.fixture
def temp_env(tmp_path, monkeypatch):
    """Create a temporary .env file and run from its directory."""
    env_file = tmp_path / ".env"
    env_file.write_text("LOG_LEVEL=WARNING\nNUM_WORKERS=1\nDEFAULT_SEED=7\n")
    monkeypatch.chdir(tmp_path)
    return env_file


@pytest.fixture(scope="session")
def small_config():
    """Fast experiment: 64x64 images and a 32x32 grid at 12.5 cm per cell."""
    return ExperimentConfig(
        scene=SceneConfig(),
        camera=CameraConfig(image_width=64, image_height=64, focal_px=55.0),
        layout=LayoutConfig(grid_size=32, extent_m=4.0),
    ).with_train(epochs=1, batch_size=4)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory, small_config):
    """Twelve generated samples (8 train, 2 val, 2 test), shared by the session."""
    root = tmp_path_factory.mktemp("dataset")
    run_gen(small_config, 12, 3, root)
    return root


@pytest.fixture(scope="session")
def config_file(tmp_path_factory, small_config):
    """The small experiment config written to disk."""
    path = tmp_path_factory.mktemp("config") / "experiment.json"
    path.write_text(small_config.model_dump_json(indent=2))
    return path
