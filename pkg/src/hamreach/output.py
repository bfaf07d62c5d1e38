"""Deterministic report and artifact writers."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

SCHEMA = 1


def _number(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def to_json(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits, so equal
    inputs give byte-identical files.  Non-finite floats become null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _number(float(obj))
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_report(path: Path, command: str, body: dict) -> Path:
    doc = {"schema": SCHEMA, "command": command, **body}
    path.write_text(to_json(doc) + "\n", encoding="utf-8")
    return path


def write_rows(path: Path, header: list[str], rows) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_number(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def write_pgm(path: Path, counts: np.ndarray) -> Path:
    """Plain (P2) greyscale image of a 2-D count array.

    Columns follow the first axis (x), rows the second (p) with high p on
    top.  Higher-dimensional grids are summed onto their first two axes.
    """
    c = np.asarray(counts)
    if c.ndim > 2:
        c = c.sum(axis=tuple(range(2, c.ndim)))
    img = c.T[::-1]
    top = int(img.max()) if img.size else 0
    maxval = 65535
    if top > maxval:
        img = np.rint(img * (maxval / top)).astype(np.int64)
    else:
        maxval = max(top, 1)
    lines = ["P2", f"{img.shape[1]} {img.shape[0]}", str(maxval)]
    lines += [" ".join(str(int(v)) for v in row) for row in img]
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path
