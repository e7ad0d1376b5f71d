"""Logging utilities for sparse_proxqn."""

import sys

from loguru import logger
from rich.console import Console
from rich.text import Text

console = Console(stderr=True)

_PLAIN_FORMAT = "{level: <7} | {extra[component]: <10} | {message}"
_RICH_FORMAT = (
    "<green>{time:HH:mm:ss.SSS}</green> | <level>{level: <7}</level> | "
    "<cyan>{extra[component]: <10}</cyan> | {message}"
)

logger.configure(extra={"component": "-"})


def configure_logging(level: str = "INFO", *, plain: bool = False) -> None:
    """Install a single stderr sink. Plain mode drops timestamps and colors."""
    logger.remove()
    logger.add(
        sys.stderr,
        level=level.upper(),
        format=_PLAIN_FORMAT if plain else _RICH_FORMAT,
        colorize=not plain,
    )


def get_logger(component: str):
    return logger.bind(component=component)


def log_info(msg: str):
    """Log a user-facing status line with ProxQN branding."""
    label = Text(" ProxQN ", style="bold bright_white on deep_sky_blue1")
    console.print(label, msg)
