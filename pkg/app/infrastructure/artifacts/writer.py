"""CSV and JSON artifact writer.

Files are written to a temporary sibling and moved into place with
``os.replace`` so a failed run never leaves a partial artifact behind.
JSON is emitted with sorted keys and floats in shortest round-trip form;
no timestamps are embedded, so identical runs produce identical bytes.
"""

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger
from pydantic import BaseModel

from app.domain.experiment import ExperimentConfig
from app.domain.reports import CsvTable


def to_jsonable(value: Any) -> Any:
    """Convert models, numpy values and tuples into plain JSON types."""
    if isinstance(value, BaseModel):
        return to_jsonable(value.model_dump(mode="python", by_alias=True))
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_ | bool):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating | float):
        value = float(value)
        if math.isfinite(value):
            return value
        return repr(value)
    return value


def canonical_json(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def config_hash(config: ExperimentConfig) -> str:
    """sha256 of the canonical config JSON, runtime fields excluded."""
    text = json.dumps(config.artifact_echo(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def format_cell(value: Any) -> str:
    """Locale-independent CSV cell; floats in shortest round-trip form."""
    if value is None:
        return ""
    if isinstance(value, bool | np.bool_):
        return "true" if value else "false"
    if isinstance(value, np.integer | int):
        return str(int(value))
    if isinstance(value, np.floating | float):
        return repr(float(value))
    return str(value)


def render_csv(table: CsvTable) -> str:
    header, rows = table
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(header)
    for row in rows:
        out.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def check_writable(out_dir: str | Path) -> Path:
    """Create ``out_dir`` if needed and make sure files can be written there.

    Raises:
        OSError: If the directory cannot be created or written to
    """
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".writable.", dir=path)
    os.close(fd)
    Path(tmp).unlink()
    return path


class ArtifactWriter:
    """Writes the artifacts of one command run."""

    def __init__(
        self,
        config: ExperimentConfig,
        command: str,
        seed_lineage: dict[str, int],
    ):
        self.config = config
        self.command = command
        self.seed_lineage = seed_lineage
        self.out_dir = Path(config.out_dir)

    def envelope(self, result: Any) -> dict[str, Any]:
        return {
            "command": self.command,
            "config": self.config.artifact_echo(),
            "config_hash": config_hash(self.config),
            "seed_lineage": self.seed_lineage,
            "result": result,
        }

    def write(self, result: Any, tables: dict[str, CsvTable]) -> list[Path]:
        """Render everything first, then move each file into place.

        Args:
            result: JSON payload (models, dicts and numpy values are accepted)
            tables: CSV tables keyed by file stem

        Returns:
            Paths written, in a stable order
        """
        rendered: list[tuple[Path, str]] = []
        if self.config.format in ("json", "both"):
            rendered.append(
                (self.out_dir / f"{self.command}.json", canonical_json(self.envelope(result)))
            )
        if self.config.format in ("csv", "both"):
            for stem in sorted(tables):
                rendered.append((self.out_dir / f"{stem}.csv", render_csv(tables[stem])))
        for path, text in rendered:
            write_atomic(path, text)
            logger.info(f"Artifact written: {path}")
        return [path for path, _ in rendered]
