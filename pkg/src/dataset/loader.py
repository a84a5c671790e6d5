"""Reading samples back for training and evaluation."""

from __future__ import annotations

import json
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from src.dataset.manifest import DatasetManifest, SampleEntry, Split, read_manifest, verify_manifest
from src.errors import DatasetError
from src.layout.grid import LayoutTensor, View
from src.layout.io import load_layout
from src.render.camera import CameraModel
from src.render.image import Image
from src.scene.models import SceneDescription


@dataclass
class Sample:
    """One loaded sample."""

    index: int
    image: Image
    layouts: dict[View, LayoutTensor]
    camera: CameraModel
    scene: SceneDescription | None = None


def _read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise DatasetError(f"Cannot read {path}: {e}") from e


def load_sample(root: Path, entry: SampleEntry, with_scene: bool = True) -> Sample:
    directory = root / entry.directory
    try:
        camera = CameraModel.model_validate(_read_json(root / entry.camera))
        scene = SceneDescription.model_validate(_read_json(root / entry.scene)) if with_scene else None
    except ValidationError as e:
        raise DatasetError(f"Invalid sample metadata in {directory}: {e}") from e
    return Sample(
        index=entry.index,
        image=Image.load(root / entry.image),
        layouts={View.TOP: load_layout(directory / "top"), View.FRONT: load_layout(directory / "front")},
        camera=camera,
        scene=scene,
    )


def load_sample_dir(directory: Path) -> Sample:
    """Load a sample directory directly, without a manifest."""
    entry = SampleEntry(
        index=0,
        split="test",
        seed=0,
        image="image.ppm",
        scene="scene.json",
        camera="camera.json",
        top=[],
        front=[],
    )
    return load_sample(directory, entry)


class LayoutDataset:
    """Samples of one split, loaded lazily by position."""

    def __init__(self, root: Path, split: Split | None = None, manifest: DatasetManifest | None = None):
        self.root = root
        self.manifest = manifest or read_manifest(root)
        self.entries = self.manifest.samples if split is None else self.manifest.split(split)

    def verify(self) -> None:
        """Check every file of this split exists and parses.

        Raises:
            ManifestError: On the first missing or unreadable sample.
        """
        verify_manifest(self.root, self.manifest, self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, position: int) -> Sample:
        return load_sample(self.root, self.entries[position])

    def __iter__(self) -> Iterator[Sample]:
        for position in range(len(self)):
            yield self[position]

    def batch(self, positions: Sequence[int], views: Sequence[View]) -> tuple[np.ndarray, dict[View, np.ndarray]]:
        return to_batch([self[int(p)] for p in positions], views)


def to_batch(samples: Sequence[Sample], views: Sequence[View]) -> tuple[np.ndarray, dict[View, np.ndarray]]:
    """Images [N, H, W, 3] and labels [N, R, D, D] per view."""
    images = np.stack([s.image.pixels for s in samples])
    targets = {view: np.stack([s.layouts[view].cells for s in samples]) for view in views}
    return images, targets
