# Command-line front door

from app.interfaces.cli.parser import build_parser
from app.interfaces.cli.runner import (
    ExitCode,
    apply_overrides,
    load_config,
    print_summary,
    run_command,
)

__all__ = [
    "ExitCode",
    "apply_overrides",
    "build_parser",
    "load_config",
    "print_summary",
    "run_command",
]
