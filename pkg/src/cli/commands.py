"""Experiment commands."""

import functools
import sys
from pathlib import Path

import click
from rich.console import Console
from rich.progress import Progress
from rich.table import Table

from src import pipeline
from src.config import settings
from src.errors import ShelfSightError
from src.experiment import ExperimentConfig, load_experiment_config
from src.metrics.evaluation import EvalTable, format_score
from src.model.variants import VARIANT_CHOICES

console = Console()

config_option = click.option(
    "--config", "config_path", type=click.Path(path_type=Path, dir_okay=False), help="Experiment config JSON"
)


def handle_errors(func):
    """Turn library errors into a red diagnostic and exit status 1."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ShelfSightError as e:
            console.print(f"[red]❌ {e}[/]")
            sys.exit(1)

    return wrapper


def load_config(
    config_path: Path | None,
    seed: int | None = None,
    variant: str | None = None,
    view: str | None = None,
) -> ExperimentConfig:
    """Experiment config with command-line overrides applied to the train section."""
    config = load_experiment_config(config_path)
    changes: dict = {}
    if seed is not None:
        changes["seed"] = seed
    if variant is not None:
        changes["variant"] = variant
        changes["view"] = view
    elif view is not None:
        changes["view"] = view
    return config.with_train(**changes) if changes else config


def print_eval_table(table: EvalTable, title: str) -> None:
    out = Table(title=title)
    out.add_column("View", style="cyan")
    out.add_column("Class", style="cyan")
    out.add_column("mIoU", style="green", justify="right")
    out.add_column("mAP", style="green", justify="right")
    for view, cls, miou, ap in table.rows():
        out.add_row(view, cls, format_score(miou), format_score(ap))
    console.print(out)


@click.command()
@config_option
@click.option("--count", default=100, show_default=True, help="Number of samples")
@click.option("--seed", type=int, default=None, help="Dataset seed (default: DEFAULT_SEED)")
@click.option("--out", type=click.Path(path_type=Path, file_okay=False), required=True, help="Dataset directory")
@click.option("--workers", type=int, default=None, help="Worker processes (default: NUM_WORKERS)")
@handle_errors
def gen(config_path: Path | None, count: int, seed: int | None, out: Path, workers: int | None):
    """🏗️  Generate a synthetic rack dataset."""
    config = load_experiment_config(config_path)
    seed = settings.default_seed if seed is None else seed
    workers = workers or settings.num_workers
    with Progress(console=console) as progress:
        task = progress.add_task("Rendering scenes", total=count)
        manifest = pipeline.run_gen(
            config, count, seed, out, workers=workers, progress=lambda _: progress.advance(task)
        )
    counts = manifest.split_counts()
    console.print(
        f"[green]✅ Wrote {manifest.count} samples to {out}[/] "
        f"[dim](train {counts['train']}, val {counts['val']}, test {counts['test']})[/]"
    )


@click.command()
@config_option
@click.option("--data", type=click.Path(path_type=Path, exists=True), required=True, help="Dataset directory")
@click.option("--out", type=click.Path(path_type=Path, dir_okay=False), required=True, help="Checkpoint path")
@click.option("--variant", type=click.Choice(VARIANT_CHOICES), default=None, help="Model variant")
@click.option("--view", type=click.Choice(["top", "front"]), default=None, help="Decoded view (S variants only)")
@click.option("--seed", type=int, default=None, help="Initialisation and shuffling seed")
@click.option("--epochs", type=int, default=None, help="Override the configured epoch count")
@click.option("--resume", is_flag=True, help="Continue from the checkpoint at --out")
@handle_errors
def train(
    config_path: Path | None,
    data: Path,
    out: Path,
    variant: str | None,
    view: str | None,
    seed: int | None,
    epochs: int | None,
    resume: bool,
):
    """🧠 Train a layout network."""
    config = load_config(config_path, seed=seed, variant=variant, view=view)
    if epochs is not None:
        config = config.with_train(epochs=epochs)

    def report(epoch: int, losses) -> None:
        console.print(
            f"[cyan]epoch {epoch + 1}[/] sup={losses.sup:.4f} "
            f"adv={losses.adv_top + losses.adv_front:.4f} "
            f"discr={losses.discr_top + losses.discr_front:.4f}"
        )

    trainer = pipeline.run_train(data, config, out, resume=resume, on_epoch=report)
    console.print(f"[green]✅ Saved {trainer.params.variant.value} checkpoint to {out}[/]")
    console.print(f"[dim]Loss log: {pipeline.loss_log_path(out)}[/]")


@click.command("eval")
@click.option("--data", type=click.Path(path_type=Path, exists=True), required=True, help="Dataset directory")
@click.option("--checkpoint", type=click.Path(path_type=Path, exists=True, dir_okay=False), help="Trained model")
@click.option("--oracle", is_flag=True, help="Score the ground truth against itself")
@click.option("--split", type=click.Choice(["train", "val", "test"]), default="test", show_default=True)
@click.option("--out", type=click.Path(path_type=Path, file_okay=False), required=True, help="Output directory")
@click.option("--workers", type=int, default=None, help="Worker processes (default: NUM_WORKERS)")
@handle_errors
def evaluate(data: Path, checkpoint: Path | None, oracle: bool, split: str, out: Path, workers: int | None):
    """📊 Evaluate layouts: per view and class mIoU and mAP."""
    table = pipeline.run_eval(
        data, checkpoint, out, oracle=oracle, split=split, workers=workers or settings.num_workers
    )
    print_eval_table(table, f"Layout metrics ({table.samples} {split} samples)")
    console.print(f"[dim]Wrote {out / 'eval.csv'} and {out / 'eval.json'}[/]")


@click.command()
@config_option
@click.argument("target", type=click.Path(path_type=Path, exists=True))
@click.option("--checkpoint", type=click.Path(path_type=Path, exists=True, dir_okay=False), help="Trained D model")
@click.option("--oracle", is_flag=True, help="Use the sample's ground-truth layouts")
@click.option("--out", type=click.Path(path_type=Path, file_okay=False), required=True, help="Output directory")
@handle_errors
def reason(config_path: Path | None, target: Path, checkpoint: Path | None, oracle: bool, out: Path):
    """📦 Count stacks and estimate free volume for one image or sample directory."""
    config = load_experiment_config(config_path)
    report = pipeline.run_reason(target, out, config, checkpoint=checkpoint, oracle=oracle)

    table = Table(title="Shelves")
    table.add_column("Shelf", style="cyan", justify="right")
    table.add_column("Stacks", justify="right")
    table.add_column("Free (cm³)", style="green", justify="right")
    for shelf in report.shelves:
        table.add_row(str(shelf.index), str(shelf.stack_count), f"{shelf.free_cm3:.0f}")
    console.print(table)
    console.print(f"[bold]{report.sentence()}[/]")
    console.print(f"[dim]Wrote {out / 'report.json'} and {out / 'overlay.png'}[/]")


@click.command()
@config_option
@click.argument("target", type=click.Path(path_type=Path, exists=True))
@click.option("--checkpoint", type=click.Path(path_type=Path, exists=True, dir_okay=False), help="Show predictions")
@click.option("--scale", default=2, show_default=True, help="Pixels per layout cell")
@click.option("--out", type=click.Path(path_type=Path, dir_okay=False), required=True, help="Output PNG")
@handle_errors
def viz(config_path: Path | None, target: Path, checkpoint: Path | None, scale: int, out: Path):
    """🎨 Render a color-coded layout panel."""
    config = load_experiment_config(config_path)
    pipeline.run_viz(target, out, config, checkpoint=checkpoint, scale=scale)
    console.print(f"[green]✅ Wrote {out}[/]")


@click.command()
@click.option("--seed", type=int, default=None, help="Input seed")
@handle_errors
def gradcheck(seed: int | None):
    """🔬 Check analytic gradients of every op against finite differences."""
    errors = pipeline.run_gradcheck(settings.default_seed if seed is None else seed)
    table = Table(title="Gradient check")
    table.add_column("Op", style="cyan")
    table.add_column("Max rel. error", justify="right")
    failed = []
    for name, error in errors.items():
        ok = error <= pipeline.GRADCHECK_TOLERANCE
        table.add_row(name, f"[{'green' if ok else 'red'}]{error:.2e}[/]")
        if not ok:
            failed.append(name)
    console.print(table)
    if failed:
        console.print(f"[red]❌ Gradient mismatch in {', '.join(failed)}[/]")
        sys.exit(1)
    console.print("[green]✅ All gradients match[/]")


@click.command()
@config_option
@click.option("--data", type=click.Path(path_type=Path, exists=True), required=True, help="Dataset directory")
@click.option("--seed", type=int, default=None, help="Seed shared by every run")
@click.option("--epochs", type=int, default=None, help="Override the configured epoch count")
@click.option("--out", type=click.Path(path_type=Path, file_okay=False), required=True, help="Output directory")
@handle_errors
def ablate(config_path: Path | None, data: Path, seed: int | None, epochs: int | None, out: Path):
    """🧪 Train and evaluate all four variants on one dataset."""
    config = load_config(config_path, seed=seed)
    if epochs is not None:
        config = config.with_train(epochs=epochs)
    path = pipeline.run_ablate(data, config, out, on_run=lambda name: console.print(f"[cyan]▶ {name}[/]"))
    console.print(f"[green]✅ Wrote {path}[/]")


@click.command()
@click.option("--data", type=click.Path(path_type=Path, exists=True), required=True, help="Dataset directory")
@handle_errors
def stats(data: Path):
    """📈 Summarise a generated dataset."""
    result = pipeline.run_stats(data)
    table = Table(title="Dataset")
    table.add_column("Statistic", style="cyan")
    table.add_column("Value", style="green")
    for split, count in result.split_counts.items():
        table.add_row(f"{split} samples", str(count))
    for visible, count in result.visible_histogram.items():
        table.add_row(f"{visible} visible shelves", str(count))
    table.add_row("Occupancy range", f"{result.min_occupancy:.3f} .. {result.max_occupancy:.3f}")
    table.add_row("Box stacks", str(result.stack_count))
    console.print(table)
