# Artifact files (CSV/JSON)

from app.infrastructure.artifacts.writer import (
    ArtifactWriter,
    CsvTable,
    canonical_json,
    check_writable,
    config_hash,
    format_cell,
    render_csv,
    to_jsonable,
    write_atomic,
)

__all__ = [
    "ArtifactWriter",
    "CsvTable",
    "canonical_json",
    "check_writable",
    "config_hash",
    "format_cell",
    "render_csv",
    "to_jsonable",
    "write_atomic",
]
