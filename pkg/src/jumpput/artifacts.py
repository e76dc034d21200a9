"""Deterministic artifact serialization: CSV and JSON writers that embed
the resolved configuration and the tool version, with all floats at 12
significant digits."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import __version__

SIG_DIGITS = 12


def fmt(value) -> str:
    """12-significant-digit float formatting; stable across runs."""
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.{SIG_DIGITS}g}"
    return str(value)


def _round_floats(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, np.ndarray)):
        obj = obj.tolist() if isinstance(obj, np.ndarray) else float(obj)
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return None
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def config_line(config: dict) -> str:
    return json.dumps(_round_floats(config), sort_keys=True,
                      separators=(",", ":"))


def write_csv(path: str | Path, columns: list, rows, config: dict):
    """CSV with `# version` / `# config` comment lines up front."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# version {__version__}",
             f"# config {config_line(config)}",
             ",".join(columns)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_json(path: str | Path, payload: dict, config: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = dict(payload)
    body["version"] = __version__
    body["config"] = config
    path.write_text(json.dumps(_round_floats(body), sort_keys=True,
                               indent=1) + "\n")
