"""Configuration commands."""

from pathlib import Path

import click
from rich.console import Console
from rich.table import Table

from src.cli.commands import handle_errors
from src.config import settings
from src.experiment import load_experiment_config, write_experiment_config

console = Console()


@click.group()
def config():
    """⚙️  Manage configuration."""
    pass


@config.command("init")
@click.argument("path", type=click.Path(path_type=Path, dir_okay=False))
@click.option("--force", is_flag=True, help="Overwrite an existing file")
@handle_errors
def config_init(path: Path, force: bool):
    """Write the default experiment config to PATH.

    Example: shelfsight config init experiment.json
    """
    if path.exists() and not force:
        console.print(f"[yellow]⚠️ {path} exists (use --force to overwrite)[/]")
        return
    write_experiment_config(path)
    console.print(f"[green]✅ Wrote default config to {path}[/]")


@config.command("show")
@click.option("--config", "config_path", type=click.Path(path_type=Path, dir_okay=False), help="Experiment config JSON")
@handle_errors
def config_show(config_path: Path | None):
    """Show process settings and the active experiment config."""
    table = Table(title="ShelfSight Settings")
    table.add_column("Setting", style="cyan")
    table.add_column("Value", style="green")
    table.add_column("Source", style="dim")
    table.add_row("Log Level", settings.log_level, ".env")
    table.add_row("Data Directory", settings.data_dir, ".env")
    table.add_row("Workers", str(settings.num_workers), ".env")
    table.add_row("Default Seed", str(settings.default_seed), ".env")

    experiment = load_experiment_config(config_path)
    source = str(config_path) if config_path else "defaults"
    for section, values in experiment.model_dump(mode="json").items():
        for key, value in values.items():
            if key == "box_catalog":
                value = f"{len(value)} entries"
            table.add_row(f"{section}.{key}", str(value), source)

    console.print()
    console.print(table)
    console.print()
