"""Deterministic JSON and CSV writers; every file carries the resolved config."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import OutputError


def clean(obj):
    """JSON-safe copy: numpy scalars to Python, nan to null, inf to a string."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (complex, np.complexfloating)):
        return [clean(obj.real), clean(obj.imag)]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def ensure_dir(path) -> Path:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {path}: {exc}") from exc
    return path


def write_json(path, result, config: dict) -> Path:
    path = Path(path)
    text = json.dumps(clean({"config": config, "result": result}), indent=2, sort_keys=True,
                      allow_nan=False)
    try:
        path.write_text(text + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def config_header(config: dict) -> list:
    return ["config " + json.dumps(clean(config), sort_keys=True, separators=(",", ":"))]


def write_rows(path, columns, rows, config: dict) -> Path:
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            for line in config_header(config):
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(columns)
            for row in rows:
                w.writerow([_cell(v) for v in row])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if v is None:
        return ""
    return v


def guarded(writer, path, *args):
    """Run a writer that takes a path, mapping OS failures to OutputError."""
    try:
        writer(path, *args)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return Path(path)
