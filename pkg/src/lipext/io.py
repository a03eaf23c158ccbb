"""Report and instance files.

Reports are JSON with sorted keys and a ``"schema": "lipext/1"`` field so
identical runs give byte-identical files. Instances are JSON objects whose
layout is checked on load; problems raise :class:`SchemaError`.
"""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, is_dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

SCHEMA = "lipext/1"


class SchemaError(ValueError):
    pass


def to_jsonable(obj):
    """Recursively convert numpy values, dataclasses and fractions for ``json``."""
    if is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return to_jsonable(obj.to_dict())
        return to_jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, Fraction):
        return {"fraction": f"{obj.numerator}/{obj.denominator}", "value": float(obj)}
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(report) -> str:
    body = dict(to_jsonable(report))
    body.setdefault("schema", SCHEMA)
    return json.dumps(body, sort_keys=True, indent=2) + "\n"


def write_report(report, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(report))
    return path


def write_csv(rows, path, header=None) -> Path:
    """Tidy CSV from a list of dicts (header from the first row) or of sequences."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = list(rows)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        if rows and isinstance(rows[0], dict):
            header = header or list(rows[0])
            out.writerow(header)
            for r in rows:
                out.writerow([_cell(r.get(h)) for h in header])
        else:
            if header:
                out.writerow(header)
            for r in rows:
                out.writerow([_cell(v) for v in r])
    return path


def _cell(v):
    v = to_jsonable(v)
    return repr(v) if isinstance(v, float) else v


def load_json(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: top level must be an object")
    schema = data.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise SchemaError(f"{path}: unsupported schema {schema!r} (expected {SCHEMA!r})")
    return data


def require(data, key, kind=None, where="instance"):
    if key not in data:
        raise SchemaError(f"{where}: missing field {key!r}")
    v = data[key]
    if kind is not None and not isinstance(v, kind):
        raise SchemaError(f"{where}: field {key!r} has the wrong type")
    return v


def check_space(d, where):
    """A space is ``{"points": [[...]], "p": ...}`` or ``{"dist": [[...]]}``."""
    if not isinstance(d, dict):
        raise SchemaError(f"{where}: must be an object")
    if "points" in d:
        pts = d["points"]
        if not isinstance(pts, list) or not pts or not all(isinstance(r, list) for r in pts):
            raise SchemaError(f"{where}: points must be a nonempty list of rows")
        if len({len(r) for r in pts}) != 1:
            raise SchemaError(f"{where}: rows of points have different lengths")
    elif "dist" in d:
        dist = d["dist"]
        if not isinstance(dist, list) or any(not isinstance(r, list) or len(r) != len(dist) for r in dist):
            raise SchemaError(f"{where}: dist must be a square matrix")
    else:
        raise SchemaError(f"{where}: needs 'points' or 'dist'")
    return d


def env_seed(seed):
    """``LIPEXT_SEED`` overrides an explicit seed."""
    raw = os.environ.get("LIPEXT_SEED")
    if raw is None or raw == "":
        return int(seed)
    try:
        v = int(raw)
    except ValueError as exc:
        raise SchemaError(f"LIPEXT_SEED={raw!r} is not an integer") from exc
    if v < 0 or v >= 2 ** 64:
        raise SchemaError("LIPEXT_SEED must be an unsigned 64-bit integer")
    return v
