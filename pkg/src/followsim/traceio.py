"""Trace serialization: one JSON object per tick, schema-versioned header."""

from __future__ import annotations

import json

from .errors import IoError

SCHEMA_VERSION = 1

ROW_KEYS = (
    "t", "robot", "v", "omega", "leader", "state", "identified", "matched",
    "match_score", "visible_fraction", "distance", "nis", "safe_distance",
    "v_cap", "candidates", "replanned", "collided",
)


def write_trace(path: str, rows: list, meta: dict | None = None) -> None:
    """Header line with schema + meta, then one row per tick.

    Nothing wallclock-dependent goes in the file so identical runs produce
    byte-identical traces.
    """
    header = {"schema": SCHEMA_VERSION, "meta": dict(meta or {})}
    try:
        with open(path, "w") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write trace {path}: {exc}") from exc


def read_trace(path: str) -> tuple[dict, list]:
    """Returns (meta, rows). Raises IoError on malformed input."""
    try:
        with open(path) as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    except OSError as exc:
        raise IoError(f"cannot read trace {path}: {exc}") from exc
    if not lines:
        raise IoError(f"trace {path} is empty")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise IoError(f"trace {path} has a malformed header: {exc}") from exc
    if not isinstance(header, dict) or "schema" not in header:
        raise IoError(f"trace {path} header lacks a schema field")
    if header["schema"] != SCHEMA_VERSION:
        raise IoError(
            f"trace {path} has schema {header['schema']}, expected {SCHEMA_VERSION}")
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IoError(f"trace {path} line {i} is malformed: {exc}") from exc
        missing = [k for k in ROW_KEYS if k not in row]
        if missing:
            raise IoError(f"trace {path} line {i} lacks keys: {missing}")
        rows.append(row)
    return header.get("meta", {}), rows
