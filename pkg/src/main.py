"""ShelfSight - logging setup and module entry point."""

import logging

from rich.logging import RichHandler

from src.config import settings


def setup_logging(level: str | None = None) -> None:
    """Configure logging for the application."""
    log_level = getattr(logging, (level or settings.log_level).upper(), logging.INFO)

    logging.basicConfig(
        level=log_level,
        format="%(name)s - %(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(show_path=False, rich_tracebacks=True)],
        force=True,
    )

    # Pillow logs every plugin import at DEBUG
    logging.getLogger("PIL").setLevel(logging.WARNING)


def main() -> None:
    """Run the command-line interface."""
    from src.cli.main import main as cli_main

    cli_main()


if __name__ == "__main__":
    main()
