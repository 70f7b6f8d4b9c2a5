"""CSV and JSON artifact writers with lossless float formatting."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def format_float(v: float) -> str:
    """17 significant digits: round-trips any float64 exactly."""
    return f"{v:.17g}"


def write_csv(path, header: list[str], rows) -> None:
    """Write comma-separated rows, floats at full precision."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            format_float(v) if isinstance(v, (float, np.floating)) else str(v)
            for v in row
        ))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def json_ready(obj):
    """Recursively convert numpy scalars/arrays into JSON-encodable values."""
    if isinstance(obj, dict):
        return {k: json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [json_ready(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def write_json(path, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(json_ready(payload), indent=2, sort_keys=False) + "\n",
        encoding="utf-8",
    )
