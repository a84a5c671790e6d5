"""Dataset generation: scene, camera, image and both layouts per sample.

Sample i uses the seed derive_seed(seed, SAMPLE_STREAM, i), so any sample
can be regenerated on its own and the output does not depend on the worker
count.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from src.dataset.manifest import DatasetManifest, SampleEntry, assign_splits, write_manifest
from src.errors import DatasetError
from src.experiment import ExperimentConfig
from src.layout.ground_truth import front_layout, top_layout
from src.layout.io import channel_path, save_layout
from src.render.raster import rasterize
from src.scene.camera import sample_camera
from src.scene.generator import generate_scene
from src.scene.rng import CAMERA_STREAM, SAMPLE_STREAM, SplitMix64, derive_seed

logger = logging.getLogger(__name__)

SAMPLES_DIR = "samples"


def sample_dir_name(index: int) -> str:
    return f"{SAMPLES_DIR}/{index:06d}"


def generate_sample(index: int, root: Path, config: ExperimentConfig, seed: int) -> SampleEntry:
    """Generate and write one sample; returns its manifest entry (split unset: train)."""
    sample_seed = derive_seed(seed, SAMPLE_STREAM, index)
    scene = generate_scene(config.scene, sample_seed)
    camera = sample_camera(config.scene, config.camera, SplitMix64(derive_seed(sample_seed, CAMERA_STREAM)))
    window = config.layout.window()
    layout_kwargs = {"grid_size": config.layout.grid_size, "max_shelves": config.layout.max_shelves}
    top = top_layout(scene, camera, window, **layout_kwargs)
    front = front_layout(scene, camera, window, **layout_kwargs)
    image = rasterize(scene, camera, config.camera.image_width, config.camera.image_height)

    rel = sample_dir_name(index)
    directory = root / rel
    try:
        directory.mkdir(parents=True, exist_ok=True)
        image.save_ppm(directory / "image.ppm")
        (directory / "scene.json").write_text(scene.model_dump_json(indent=2))
        (directory / "camera.json").write_text(camera.model_dump_json(indent=2))
    except OSError as e:
        raise DatasetError(f"Cannot write sample {directory}: {e}") from e
    save_layout(top, directory / "top", camera)
    save_layout(front, directory / "front", camera)

    channels = range(config.layout.max_shelves)
    return SampleEntry(
        index=index,
        split="train",
        seed=sample_seed,
        image=f"{rel}/image.ppm",
        scene=f"{rel}/scene.json",
        camera=f"{rel}/camera.json",
        top=[channel_path(Path(rel) / "top", i).as_posix() for i in channels],
        front=[channel_path(Path(rel) / "front", i).as_posix() for i in channels],
    )


def _generate_task(args: tuple[int, Path, ExperimentConfig, int]) -> SampleEntry:
    return generate_sample(*args)


def generate_dataset(
    config: ExperimentConfig,
    count: int,
    seed: int,
    root: Path,
    workers: int = 1,
    progress: Callable[[int], None] | None = None,
) -> DatasetManifest:
    """Write `count` samples and the manifest under `root`.

    Args:
        config: Experiment settings.
        count: Number of samples.
        seed: Dataset seed.
        root: Output directory.
        workers: Process count; 1 generates in-process.
        progress: Called once per finished sample.

    Raises:
        DatasetError: If the output directory is not writable.
    """
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DatasetError(f"Cannot create output directory {root}: {e}") from e

    tasks = [(index, root, config, seed) for index in range(count)]
    entries: list[SampleEntry] = []
    if workers > 1 and count > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for entry in pool.map(_generate_task, tasks):
                entries.append(entry)
                if progress:
                    progress(entry.index)
    else:
        for task in tasks:
            entries.append(_generate_task(task))
            if progress:
                progress(task[0])

    splits = assign_splits(count)
    entries = [entry.model_copy(update={"split": split}) for entry, split in zip(entries, splits, strict=True)]
    manifest = DatasetManifest(
        seed=seed,
        count=count,
        max_shelves=config.layout.max_shelves,
        grid_size=config.layout.grid_size,
        extent_m=config.layout.extent_m,
        range_m=config.layout.range_m,
        image_width=config.camera.image_width,
        image_height=config.camera.image_height,
        config=config,
        samples=entries,
    )
    write_manifest(root, manifest)
    logger.info(f"Generated {count} samples in {root} ({manifest.split_counts()})")
    return manifest
