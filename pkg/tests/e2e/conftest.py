"""E2E fixtures: run the specrad command in-process against a scratch directory."""

import json
from collections.abc import Callable
from pathlib import Path

import pytest

from app.main import main

CliRun = Callable[..., tuple[int, str]]


@pytest.fixture
def specrad(capsys: pytest.CaptureFixture[str]) -> CliRun:
    """Run one command line and return its exit code and stdout.

    Usage: ``code, out = specrad("simulate", "--n", "10", out=tmp_path)``
    """

    def run(*argv: str, out: Path | None = None, seed: int | None = 7) -> tuple[int, str]:
        command, *rest = argv
        args = [command, *rest]
        if out is not None:
            args += ["--out", str(out)]
        if seed is not None:
            args += ["--seed", str(seed)]
        capsys.readouterr()
        code = main(args)
        return code, capsys.readouterr().out

    return run


@pytest.fixture
def write_json(tmp_path: Path) -> Callable[[str, object], Path]:
    """Write a JSON document next to the test's artifacts."""

    def write(name: str, payload: object) -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    return write
