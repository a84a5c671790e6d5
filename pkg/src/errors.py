"""Exception hierarchy shared by every ShelfSight package."""

from __future__ import annotations

from typing import Any


class ShelfSightError(Exception):
    """Base class for all errors raised by ShelfSight."""


class ConfigError(ShelfSightError):
    """A configuration file or value is invalid."""


class ManifestError(ShelfSightError):
    """A dataset manifest is missing, malformed or inconsistent."""


class DatasetError(ShelfSightError):
    """Reading or writing dataset artifacts failed."""


class CheckpointError(ShelfSightError):
    """A checkpoint file is unreadable or has an unexpected layout."""


class ContractViolation(ShelfSightError):
    """An operation received inputs that break its shape or value contract."""


class BehindCameraError(ShelfSightError):
    """A point with non-positive depth was projected."""

    def __init__(self, depth: float):
        super().__init__(f"Point is behind the camera (depth={depth:.6g} m)")
        self.depth = depth


class TrainingDivergedError(ShelfSightError):
    """A training step produced a non-finite loss."""

    def __init__(self, step: int, losses: dict[str, Any]):
        terms = ", ".join(f"{k}={v}" for k, v in losses.items())
        super().__init__(f"Non-finite loss at step {step}: {terms}")
        self.step = step
        self.losses = losses
