"""specrad command-line entry point."""

import sys
from collections.abc import Sequence

from loguru import logger

from app.core.config import settings
from app.core.logging import configure_logging
from app.interfaces.cli import build_parser, run_command


def main(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, run the command and return its exit code.

    argparse itself exits with code 2 on malformed flags.
    """
    configure_logging(settings.LOG_LEVEL)
    args = build_parser().parse_args(argv)
    logger.debug(f"Starting {settings.PROJECT_NAME} {args.command}")
    return int(run_command(args))


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
