"""Deterministic JSON output: sorted keys, floats at 17 significant digits.

The stdlib encoder prints the shortest repr, which is exact but not fixed
width; reports here need identical bytes across runs, so floats are
formatted explicitly and the rest is left to ``json``.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def _float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    if "." not in s and "e" not in s and "n" not in s:
        s += ".0"
    return s


def _plain(obj):
    """numpy scalars and arrays to builtin types."""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _encode(obj, indent: int | None, level: int) -> str:
    obj = _plain(obj)
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, float):
        return _float(obj)
    if indent is None:
        sep, pad, end = ", ", "", ""
    else:
        pad = "\n" + " " * (indent * (level + 1))
        end = "\n" + " " * (indent * level)
        sep = ","
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj, key=str)]
        return "{" + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in obj]
        return "[" + sep.join(items) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int | None = 1) -> str:
    return _encode(obj, indent, 0)


def dump(obj, path, indent: int | None = 1) -> None:
    Path(path).write_text(dumps(obj, indent) + "\n", encoding="utf-8")


def load(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
