"""CSV/JSON writers with stable, byte-reproducible formatting."""

from __future__ import annotations

import io
import json
import sys

import numpy as np


def fmt(x) -> str:
    """17 significant digits, '.' decimal separator; integers stay integers."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def to_csv(header: list[str], rows) -> str:
    buf = io.StringIO(newline="")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def to_json(meta: dict, data) -> str:
    return json.dumps({"meta": _jsonable(meta), "data": _jsonable(data)}, indent=1, sort_keys=True) + "\n"


def rows_to_records(header: list[str], rows) -> list[dict]:
    return [dict(zip(header, (v if isinstance(v, str) else _jsonable(v) for v in row))) for row in rows]


def write_text(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
