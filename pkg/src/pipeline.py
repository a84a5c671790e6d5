"""Experiment workflows behind the CLI: generate, train, evaluate, reason, visualise, ablate."""

from __future__ import annotations

import csv
import logging
import math
from collections import Counter
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from src.dataset.generate import generate_dataset
from src.dataset.loader import LayoutDataset, load_sample_dir
from src.dataset.manifest import DatasetManifest, read_manifest
from src.errors import ConfigError, DatasetError
from src.experiment import ExperimentConfig
from src.layout.grid import LayoutTensor, View
from src.layout.io import load_sidecar
from src.metrics.evaluation import (
    EvalTable,
    LayoutClass,
    LayoutPredictor,
    NetworkPredictor,
    OraclePredictor,
    SampleScores,
    format_score,
    reduce_scores,
    score_batch,
)
from src.model.network import NetworkParams, predict
from src.model.trainer import LossReport, Trainer, load_params, write_loss_log
from src.model.variants import Variant
from src.nn.gradcheck import TOLERANCE as GRADCHECK_TOLERANCE
from src.nn.gradcheck import check_all_ops
from src.reasoning.report import RackReport, reason_layouts, render_overlay
from src.render.image import Image
from src.render.viz import layout_panel

logger = logging.getLogger(__name__)

ABLATION_HEADER = [
    "method",
    "top_rack_miou",
    "top_rack_map",
    "top_box_miou",
    "top_box_map",
    "front_rack_miou",
    "front_rack_map",
    "front_box_miou",
    "front_box_map",
]


def run_gen(
    config: ExperimentConfig,
    count: int,
    seed: int,
    out: Path,
    workers: int = 1,
    progress: Callable[[int], None] | None = None,
) -> DatasetManifest:
    return generate_dataset(config, count, seed, out, workers=workers, progress=progress)


def check_compatible(manifest: DatasetManifest, config: ExperimentConfig) -> None:
    """Raise ConfigError when the dataset and the network disagree on sizes."""
    network = config.network_config()
    expected = {
        "max_shelves": network.max_shelves,
        "grid_size": network.grid_size,
        "image_width": network.image_width,
        "image_height": network.image_height,
    }
    found = {key: getattr(manifest, key) for key in expected}
    if found != expected:
        raise ConfigError(f"Dataset was generated with {found}, the model expects {expected}")


def loss_log_path(checkpoint: Path) -> Path:
    return checkpoint.with_name(checkpoint.stem + ".losses.csv")


def run_train(
    manifest_path: Path,
    config: ExperimentConfig,
    out: Path,
    resume: bool = False,
    on_epoch: Callable[[int, LossReport], None] | None = None,
) -> Trainer:
    """Train on the train split, saving the checkpoint after every epoch.

    Raises:
        ConfigError: If the dataset and config disagree.
        TrainingDivergedError: On a non-finite loss.
    """
    root = manifest_path if manifest_path.is_dir() else manifest_path.parent
    manifest = read_manifest(manifest_path)
    check_compatible(manifest, config)
    dataset = LayoutDataset(root, "train", manifest=manifest)
    dataset.verify()

    if resume and out.exists():
        trainer = Trainer.load(out, config.train)
        logger.info(f"Resuming {out} after epoch {trainer.epoch}")
    else:
        trainer = Trainer.create(config.network_config(), config.train)
        resume = False

    log_path = loss_log_path(out)
    if not resume:
        write_loss_log(log_path, [])

    def after_epoch(epoch: int, report: LossReport) -> None:
        trainer.save(out)
        write_loss_log(log_path, [(epoch, report)], append=True)
        if on_epoch:
            on_epoch(epoch, report)

    views = trainer.params.views
    trainer.fit(lambda positions: dataset.batch(positions, views), len(dataset), on_epoch=after_epoch)
    trainer.save(out)
    return trainer


def _eval_shard(args: tuple[LayoutPredictor, LayoutDataset, list[list[int]]]) -> list[SampleScores]:
    predictor, dataset, batches = args
    per_image: list[SampleScores] = []
    for positions in batches:
        per_image.extend(score_batch(predictor, [dataset[p] for p in positions]))
    return per_image


def evaluate_dataset(
    predictor: LayoutPredictor, dataset: LayoutDataset, batch_size: int = 16, workers: int = 1
) -> EvalTable:
    """Score every sample of a dataset split.

    Batches are formed by sample position and handed out to the workers in
    contiguous shards. Shard results are reduced in position order, so the
    table does not depend on the worker count.

    Raises:
        DatasetError: If the split is empty.
    """
    positions = list(range(len(dataset)))
    batches = [positions[i : i + batch_size] for i in range(0, len(positions), batch_size)]
    per_image: list[SampleScores] = []
    if workers > 1 and len(batches) > 1:
        size = math.ceil(len(batches) / workers)
        shards = [(predictor, dataset, batches[i : i + size]) for i in range(0, len(batches), size)]
        with ProcessPoolExecutor(max_workers=len(shards)) as pool:
            for shard in pool.map(_eval_shard, shards):
                per_image.extend(shard)
    else:
        per_image = _eval_shard((predictor, dataset, batches))
    table = reduce_scores(per_image)
    logger.info(f"Evaluated {table.samples} samples with {workers} worker(s)")
    return table


def run_eval(
    manifest_path: Path,
    checkpoint: Path | None,
    out_dir: Path,
    oracle: bool = False,
    split: str = "test",
    batch_size: int = 16,
    workers: int = 1,
) -> EvalTable:
    """Evaluate a checkpoint (or the ground-truth oracle) and write eval.csv / eval.json.

    Raises:
        ManifestError: If a sample of the split is missing or unreadable.
        DatasetError: If the split is empty.
    """
    root = manifest_path if manifest_path.is_dir() else manifest_path.parent
    dataset = LayoutDataset(root, split)  # type: ignore[arg-type]
    if oracle:
        predictor: LayoutPredictor = OraclePredictor()
    else:
        if checkpoint is None:
            raise ConfigError("Evaluation needs --checkpoint or --oracle")
        predictor = NetworkPredictor(load_params(checkpoint))
    dataset.verify()
    table = evaluate_dataset(predictor, dataset, batch_size=batch_size, workers=workers)
    table.write_csv(out_dir / "eval.csv")
    table.write_json(out_dir / "eval.json")
    return table


def predicted_layouts(image: Image, params: NetworkParams, extent_m: float) -> dict[View, LayoutTensor]:
    """Label grids the network predicts for one image, as layouts of the given extent."""
    labels = predict(image, params)
    return {view: LayoutTensor(view=view, cells=cells[0], extent_m=extent_m) for view, cells in labels.items()}


def _resolve_layouts(
    target: Path, checkpoint: Path | None, oracle: bool, config: ExperimentConfig
) -> dict[View, LayoutTensor]:
    """Layouts of a sample directory (oracle) or predicted from an image or sample directory."""
    if oracle:
        if not target.is_dir():
            raise DatasetError(f"Oracle mode needs a sample directory, got {target}")
        sample = load_sample_dir(target)
        return dict(sample.layouts)
    if checkpoint is None:
        raise ConfigError("Provide --checkpoint or use --oracle")
    params = load_params(checkpoint)
    image_path = target / "image.ppm" if target.is_dir() else target
    extent = config.layout.extent_m
    if target.is_dir() and (target / "top").is_dir():
        extent = load_sidecar(target / "top").extent_m
    return predicted_layouts(Image.load(image_path), params, extent)


def run_reason(
    target: Path,
    out_dir: Path,
    config: ExperimentConfig,
    checkpoint: Path | None = None,
    oracle: bool = False,
) -> RackReport:
    """Fuse the layouts of one image and write report.json and overlay.png."""
    layouts = _resolve_layouts(target, checkpoint, oracle, config)
    if View.TOP not in layouts or View.FRONT not in layouts:
        raise ConfigError("Reasoning needs top and front layouts; use a d or d-disc checkpoint")
    report, fusions = reason_layouts(layouts[View.TOP], layouts[View.FRONT])
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(report.model_dump_json(indent=2))
    overlay = render_overlay(layouts[View.TOP], layouts[View.FRONT], fusions)
    overlay.save_png(out_dir / "overlay.png")
    return report


def run_viz(
    target: Path,
    out: Path,
    config: ExperimentConfig,
    checkpoint: Path | None = None,
    scale: int = 2,
) -> Image:
    """Color-coded layout panel of a sample's ground truth, or of a prediction when a checkpoint is given."""
    if checkpoint is None:
        if not target.is_dir():
            raise DatasetError(f"Ground-truth visualisation needs a sample directory, got {target}")
        layouts = _resolve_layouts(target, None, True, config)
    else:
        layouts = _resolve_layouts(target, checkpoint, False, config)
    if View.TOP in layouts:
        panel = layout_panel(layouts[View.TOP], layouts.get(View.FRONT), scale=scale)
    else:
        panel = layout_panel(layouts[View.FRONT], scale=scale)
    panel.save_png(out)
    return panel


ABLATION_RUNS: tuple[tuple[Variant, str | None], ...] = (
    (Variant.S, "top"),
    (Variant.S, "front"),
    (Variant.S_DISC, "top"),
    (Variant.S_DISC, "front"),
    (Variant.D, None),
    (Variant.D_DISC, None),
)


def _ablation_row(method: str, tables: dict[View, EvalTable]) -> list[str]:
    row = [method]
    for view in (View.TOP, View.FRONT):
        for cls in (LayoutClass.RACK, LayoutClass.BOX):
            entry = tables[view].get(view, cls)
            row.extend([format_score(entry.miou), format_score(entry.map)])
    return row


def run_ablate(
    manifest_path: Path,
    config: ExperimentConfig,
    out_dir: Path,
    on_run: Callable[[str], None] | None = None,
) -> Path:
    """Train and evaluate every variant on one dataset and seed; writes ablation.csv.

    Single-view variants are trained once per view and their two tables joined
    into one row.
    """
    tables: dict[tuple[Variant, str | None], EvalTable] = {}
    for variant, view in ABLATION_RUNS:
        name = variant.value if view is None else f"{variant.value}-{view}"
        if on_run:
            on_run(name)
        run_config = config.with_train(variant=variant, view=view)
        checkpoint = out_dir / "runs" / name / "model.ssck"
        run_train(manifest_path, run_config, checkpoint)
        tables[(variant, view)] = run_eval(manifest_path, checkpoint, out_dir / "runs" / name)

    path = out_dir / "ablation.csv"
    out_dir.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(ABLATION_HEADER)
        for variant in Variant:
            if variant.dual:
                table = tables[(variant, None)]
                per_view = {View.TOP: table, View.FRONT: table}
            else:
                per_view = {View.TOP: tables[(variant, "top")], View.FRONT: tables[(variant, "front")]}
            writer.writerow(_ablation_row(variant.value, per_view))
    return path


@dataclass
class DatasetStats:
    split_counts: dict[str, int]
    visible_histogram: dict[int, int] = field(default_factory=dict)
    min_occupancy: float = math.nan
    max_occupancy: float = math.nan
    stack_count: int = 0


def run_stats(manifest_path: Path) -> DatasetStats:
    """Split sizes, visible-shelf histogram and occupancy range of a dataset."""
    root = manifest_path if manifest_path.is_dir() else manifest_path.parent
    dataset = LayoutDataset(root)
    visible: Counter[int] = Counter()
    occupancies: list[float] = []
    stacks = 0
    for sample in dataset:
        visible[len(sample.layouts[View.TOP].visible)] += 1
        if sample.scene is not None:
            occupancies.extend(shelf.occupancy for shelf in sample.scene.shelves)
            stacks += sample.scene.stack_count
    return DatasetStats(
        split_counts=dataset.manifest.split_counts(),
        visible_histogram=dict(sorted(visible.items())),
        min_occupancy=float(np.min(occupancies)) if occupancies else math.nan,
        max_occupancy=float(np.max(occupancies)) if occupancies else math.nan,
        stack_count=stacks,
    )


def run_gradcheck(seed: int = 0) -> dict[str, float]:
    return check_all_ops(seed)
