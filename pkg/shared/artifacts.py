"""CSV/JSON artifact utilities shared by the harness.

Every artifact carries an ``ArtifactHeader``: CSV files as ``#``-prefixed
lines above the header row, JSON files under the ``"meta"`` key. Files are
written to a temporary sibling and moved into place with ``os.replace`` so a
reader never observes a partial file.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, Field

from shared.config import get_settings

# Set up module logger
logger = logging.getLogger("pppconc.artifacts")


class ArtifactHeader(BaseModel):
    """Provenance written at the top of every artifact."""

    tool: str = Field(default_factory=lambda: get_settings().tool_name)
    version: str = Field(default_factory=lambda: get_settings().tool_version)
    experiment: str
    config_hash: str = Field(description="SHA-256 of the canonical JSON config")
    seed: int | None = None
    notes: list[str] = Field(default_factory=list)


def canonical_json(payload: Mapping[str, Any]) -> str:
    """Serialize with sorted keys and no whitespace so equal configs hash equally."""
    return json.dumps(to_jsonable(payload), sort_keys=True, separators=(",", ":"))


def config_hash(payload: Mapping[str, Any]) -> str:
    """Hash a config mapping."""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def format_value(value: Any) -> str:
    """Render one CSV cell; floats use repr so round-trips are exact."""
    if isinstance(value, bool | np.bool_):
        return "true" if value else "false"
    if isinstance(value, int | np.integer):
        return str(int(value))
    if isinstance(value, float | np.floating):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and pydantic models into plain JSON types."""
    if isinstance(value, BaseModel):
        return to_jsonable(value.model_dump(mode="json"))
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, list | tuple):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, float | np.floating):
        f = float(value)
        # JSON has no inf/nan
        return f if math.isfinite(f) else str(f)
    return value


def _atomic_write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except OSError as e:
        logger.error(f"Failed to write artifact {path}: {str(e)}", exc_info=True)
        if tmp.exists():
            tmp.unlink()
        raise
    logger.info(f"Wrote {path}")
    return path


def write_csv(
    path: str | Path,
    header: ArtifactHeader,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
) -> Path:
    """Write a CSV artifact with ``#`` metadata lines."""
    buf = io.StringIO()
    for key, value in header.model_dump().items():
        if key == "notes":
            for note in value:
                buf.write(f"# note: {note}\n")
        else:
            buf.write(f"# {key}: {format_value(value)}\n")

    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} cells, expected {len(columns)}")
        writer.writerow([format_value(v) for v in row])
    return _atomic_write_text(Path(path), buf.getvalue())


def write_json(path: str | Path, header: ArtifactHeader, payload: Mapping[str, Any]) -> Path:
    """Write a JSON artifact; the header goes under ``meta``."""
    document = {"meta": header.model_dump(), **to_jsonable(payload)}
    text = json.dumps(document, indent=2, sort_keys=True) + "\n"
    return _atomic_write_text(Path(path), text)


def read_csv(path: str | Path) -> tuple[dict[str, str], list[str], list[list[str]]]:
    """Read a CSV artifact back into (metadata, columns, rows)."""
    meta: dict[str, str] = {}
    body: list[str] = []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("# "):
                key, _, value = line[2:].rstrip("\n").partition(": ")
                if key == "note":
                    meta.setdefault("notes", "")
                    meta["notes"] += value + "\n"
                else:
                    meta[key] = value
            else:
                body.append(line)
    reader = list(csv.reader(body))
    if not reader:
        return meta, [], []
    return meta, reader[0], reader[1:]


def csv_body(path: str | Path) -> str:
    """The CSV text below the metadata lines (used for reproducibility checks)."""
    with open(path, encoding="utf-8", newline="") as fh:
        return "".join(line for line in fh if not line.startswith("#"))
