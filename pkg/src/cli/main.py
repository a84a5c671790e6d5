"""ShelfSight CLI."""

import click
from rich.console import Console

from src import __version__
from src.cli.commands import ablate, evaluate, gen, gradcheck, reason, stats, train, viz
from src.cli.config import config
from src.main import setup_logging

console = Console()


@click.group(invoke_without_command=True)
@click.version_option(version=__version__, prog_name="ShelfSight")
@click.option("--log-level", default=None, help="Override LOG_LEVEL")
@click.pass_context
def cli(ctx, log_level: str | None):
    """📦 ShelfSight - shelf layouts and free space from a single image.

    Synthetic rack datasets, layout networks, evaluation and 3D reasoning.
    """
    setup_logging(log_level)
    if ctx.invoked_subcommand is None:
        console.print("[bold]Commands:[/]")
        console.print("  [cyan]shelfsight gen[/]       Generate a dataset")
        console.print("  [cyan]shelfsight train[/]     Train a layout network")
        console.print("  [cyan]shelfsight eval[/]      Score layouts (mIoU, mAP)")
        console.print("  [cyan]shelfsight reason[/]    Count stacks and free space")
        console.print("  [cyan]shelfsight ablate[/]    Compare all four variants")
        console.print()
        console.print("[dim]Run 'shelfsight --help' for all options[/]")


cli.add_command(gen)
cli.add_command(train)
cli.add_command(evaluate)
cli.add_command(reason)
cli.add_command(viz)
cli.add_command(gradcheck)
cli.add_command(ablate)
cli.add_command(stats)
cli.add_command(config)


def main():
    """Entry point for the CLI."""
    cli()


if __name__ == "__main__":
    main()
