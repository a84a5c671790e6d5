"""RGB image container and PPM file I/O."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from src.errors import ContractViolation, DatasetError


@dataclass
class Image:
    """8-bit RGB image stored row-major.

    Attributes:
        width: Pixels per row.
        height: Number of rows.
        pixels: uint8 array of shape [height, width, 3].
    """

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        expected = (self.height, self.width, 3)
        if self.pixels.shape != expected or self.pixels.dtype != np.uint8:
            raise ContractViolation(
                f"Image pixels must be uint8 {expected}, got {self.pixels.dtype} {self.pixels.shape}"
            )

    @classmethod
    def filled(cls, width: int, height: int, color: tuple[int, int, int]) -> Image:
        pixels = np.empty((height, width, 3), dtype=np.uint8)
        pixels[...] = np.asarray(color, dtype=np.uint8)
        return cls(width, height, pixels)

    def to_bytes(self) -> bytes:
        """Row-major RGB triplets, exactly width * height * 3 bytes."""
        return np.ascontiguousarray(self.pixels).tobytes()

    def save_ppm(self, path: Path) -> None:
        """Write a binary P6 PPM (maxval 255)."""
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            PILImage.fromarray(self.pixels, mode="RGB").save(path, format="PPM")
        except OSError as e:
            raise DatasetError(f"Cannot write image {path}: {e}") from e

    def save_png(self, path: Path) -> None:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            PILImage.fromarray(self.pixels, mode="RGB").save(path, format="PNG")
        except OSError as e:
            raise DatasetError(f"Cannot write image {path}: {e}") from e

    @classmethod
    def load(cls, path: Path) -> Image:
        """Read any RGB image Pillow understands (PPM included)."""
        try:
            with PILImage.open(path) as img:
                pixels = np.asarray(img.convert("RGB"), dtype=np.uint8).copy()
        except OSError as e:
            raise DatasetError(f"Cannot read image {path}: {e}") from e
        height, width = pixels.shape[:2]
        return cls(width, height, pixels)
