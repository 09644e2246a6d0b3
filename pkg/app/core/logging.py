"""Loguru sink configuration."""

import sys

from loguru import logger


def configure_logging(level: str) -> None:
    """Route all log records to a single stderr sink.

    stdout is kept free for the command summary tables.
    """
    logger.remove()
    logger.add(
        sys.stderr,
        level=level.upper(),
        format="<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {message}",
    )
