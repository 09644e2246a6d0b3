"""Config loading, command dispatch and the exit-code contract."""

import argparse
import sys
from enum import IntEnum
from pathlib import Path
from typing import Any, TextIO

from loguru import logger
from pydantic import ValidationError

from app.application.experiment_service import COMMANDS, CommandOutcome
from app.domain.errors import (
    CertificateContractViolation,
    ConfigError,
    DegenerateVariance,
    DomainError,
    EigenFailure,
    EmptyInput,
    FlagViolation,
    InsufficientSamples,
    InvariantViolation,
    NumericalFailure,
    SingularInput,
    StepOverflow,
    UnsupportedForSampler,
)
from app.domain.experiment import ExperimentConfig
from app.infrastructure.artifacts import check_writable, format_cell

# CLI flags copied onto config fields when given
CONFIG_FLAGS = (
    "master_seed",
    "threads",
    "out_dir",
    "format",
    "n",
    "trials",
    "checkpoints",
    "side",
    "full_spectrum",
    "observable",
    "centering",
    "matrix_path",
    "batch",
    "stationary_points",
    "hyperplane_count",
    "decay_item",
    "n_grid",
    "decay_rate",
)
MEASURE_FLAGS = ("ensemble", "dim", "lambda_", "theta")


class ExitCode(IntEnum):
    OK = 0
    CONFIG = 2
    CERTIFICATE = 3
    INVARIANT = 4
    NUMERICAL = 5


USAGE_ERRORS = (
    ConfigError,
    ValidationError,
    SingularInput,
    DomainError,
    InsufficientSamples,
    FlagViolation,
    UnsupportedForSampler,
    EmptyInput,
)


def load_config(path: str | None) -> ExperimentConfig:
    """Parse the JSON config, or return the defaults when no path is given.

    Raises:
        ConfigError: If the file cannot be read
        ValidationError: If the document does not describe a valid config
    """
    if path is None:
        return ExperimentConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return ExperimentConfig.model_validate_json(text)


def _measure_override(base: dict[str, Any], args: argparse.Namespace) -> dict[str, Any] | None:
    given = {k: getattr(args, k, None) for k in MEASURE_FLAGS}
    given = {k: v for k, v in given.items() if v is not None}
    if not given:
        return None
    if "ensemble" not in given and {"lambda_", "theta"} & given.keys():
        given["ensemble"] = "notconv"
    current = base.get("measure", {})
    if "ensemble" not in given and "ensemble" not in current:
        raise ConfigError("--dim only applies to a named ensemble; pass --ensemble")
    same = given.get("ensemble", current.get("ensemble")) == current.get("ensemble")
    measure = dict(current) if same else {}
    measure.update({"lambda" if k == "lambda_" else k: v for k, v in given.items()})
    return measure


def apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    """Copy the flags given on the command line onto the config and re-validate.

    Raises:
        ConfigError: If the flags do not combine into a measure
        ValidationError: If the merged config is invalid
    """
    data = config.echo()
    for name in CONFIG_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = list(value) if isinstance(value, tuple) else value
    measure = _measure_override(data, args)
    if measure is not None:
        data["measure"] = measure
    return ExperimentConfig.model_validate(data)


def print_summary(outcome: CommandOutcome, out: TextIO | None = None) -> None:
    """One-screen key/value table on stdout."""
    out = out or sys.stdout
    width = max((len(k) for k in outcome.summary), default=0)
    print(f"== {outcome.command} ==", file=out)
    for key, value in outcome.summary.items():
        print(f"{key:<{width}}  {format_cell(value)}", file=out)
    for path in outcome.artifacts:
        print(f"artifact: {path}", file=out)


def run_command(args: argparse.Namespace, out: TextIO | None = None) -> int:
    """Run one parsed command and map its errors to exit codes."""
    try:
        config = apply_overrides(load_config(args.config), args)
        check_writable(config.out_dir)
        logger.info(f"Running {args.command} (seed={config.master_seed}, threads={config.threads})")
        outcome = COMMANDS[args.command](config)
    except USAGE_ERRORS as e:
        logger.error(f"Invalid input: {getattr(e, 'reason', e)}")
        return ExitCode.CONFIG
    except OSError as e:
        logger.error(f"Output directory is not writable: {e}")
        return ExitCode.CONFIG
    except CertificateContractViolation as e:
        logger.error(f"Certificate contract violated: {e.reason}")
        return ExitCode.CERTIFICATE
    except (InvariantViolation, DegenerateVariance) as e:
        logger.error(f"Exact invariant failed: {e.reason}")
        return ExitCode.INVARIANT
    except NumericalFailure as e:
        logger.error(f"Numerical failure in trial {e.trial}: {e.reason}")
        return ExitCode.NUMERICAL
    except (EigenFailure, StepOverflow) as e:
        logger.error(f"Numerical failure: {e.reason}")
        return ExitCode.NUMERICAL
    except Exception as e:
        logger.error(f"Unexpected error during {args.command}: {e}")
        raise
    print_summary(outcome, out)
    return ExitCode.OK
