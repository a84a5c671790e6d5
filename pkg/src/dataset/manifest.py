"""Dataset manifest: one JSON file listing every sample and its split."""

from __future__ import annotations

import json
from collections.abc import Sequence
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field, ValidationError

from src.errors import DatasetError, ManifestError
from src.experiment import ExperimentConfig

MANIFEST_FILENAME = "manifest.json"
MANIFEST_VERSION = 1

Split = Literal["train", "val", "test"]
SPLITS: tuple[Split, ...] = ("train", "val", "test")


class SampleEntry(BaseModel):
    """Files of one sample, relative to the dataset root."""

    index: int
    split: Split
    seed: int
    image: str
    scene: str
    camera: str
    top: list[str]
    front: list[str]

    @property
    def directory(self) -> str:
        return str(Path(self.image).parent)


class DatasetManifest(BaseModel):
    version: int = MANIFEST_VERSION
    seed: int
    count: int
    max_shelves: int
    grid_size: int
    extent_m: float
    range_m: float
    image_width: int
    image_height: int
    config: ExperimentConfig
    samples: list[SampleEntry] = Field(default_factory=list)

    def split(self, name: Split) -> list[SampleEntry]:
        return [s for s in self.samples if s.split == name]

    def split_counts(self) -> dict[str, int]:
        return {name: len(self.split(name)) for name in SPLITS}


def assign_splits(count: int) -> list[Split]:
    """Split labels in index order, train:val:test = 4:1:1."""
    val = test = count // 6
    train = count - val - test
    return ["train"] * train + ["val"] * val + ["test"] * test


def manifest_path(root: Path) -> Path:
    return root / MANIFEST_FILENAME


def write_manifest(root: Path, manifest: DatasetManifest) -> Path:
    path = manifest_path(root)
    try:
        path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    except OSError as e:
        raise ManifestError(f"Failed to write manifest: {path}") from e
    return path


def read_manifest(path: Path) -> DatasetManifest:
    """Load a manifest from its file or from the dataset directory."""
    if path.is_dir():
        path = manifest_path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ManifestError(f"Manifest not found or unreadable: {path}") from e
    except json.JSONDecodeError as e:
        raise ManifestError(f"Manifest is not valid JSON: {path}") from e

    if not isinstance(data, dict) or data.get("version") != MANIFEST_VERSION:
        raise ManifestError(
            f"Unsupported manifest version: {data.get('version') if isinstance(data, dict) else None} "
            f"(expected {MANIFEST_VERSION})"
        )
    try:
        manifest = DatasetManifest.model_validate(data)
    except ValidationError as e:
        raise ManifestError(f"Invalid manifest {path}: {e}") from e
    if len(manifest.samples) != manifest.count:
        raise ManifestError(f"Manifest {path} lists {len(manifest.samples)} samples, expected {manifest.count}")
    return manifest


def verify_manifest(root: Path, manifest: DatasetManifest, entries: Sequence[SampleEntry] | None = None) -> None:
    """Check every referenced file exists and parses.

    Args:
        root: Dataset directory.
        manifest: Loaded manifest.
        entries: Samples to check; defaults to all of them.

    Raises:
        ManifestError: On the first missing or unreadable file.
    """
    from src.dataset.loader import load_sample

    for entry in manifest.samples if entries is None else entries:
        for rel in [entry.image, entry.scene, entry.camera, *entry.top, *entry.front]:
            if not (root / rel).is_file():
                raise ManifestError(f"Sample {entry.index}: missing file {root / rel}")
        try:
            load_sample(root, entry)
        except DatasetError as e:
            raise ManifestError(f"Sample {entry.index} does not parse: {e}") from e
