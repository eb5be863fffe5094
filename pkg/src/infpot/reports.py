"""Deterministic serialization of experiment outputs.

All floating-point values are written with 9 significant digits; JSON keys
keep insertion order.  Repeated runs of the same configuration therefore
produce byte-identical files (timing is opt-in for that reason).
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def fmt_float(x: float) -> str:
    if isinstance(x, (np.floating,)):
        x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.9g" % x


def _dump(obj, indent: int) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = (f'{pad}  {json.dumps(str(k))}: {_dump(v, indent + 1)}'
                 for k, v in obj.items())
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = (f"{pad}  {_dump(v, indent + 1)}" for v in obj)
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value) or math.isinf(value):
            return "null"
        return fmt_float(value)
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(_dump(payload, 0) + "\n", encoding="utf-8")


def write_csv(path: str | Path, header: list[str], rows) -> None:
    """Rows may mix floats (formatted to 9 significant digits) and strings."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = [cell if isinstance(cell, str) else
                     (str(cell) if isinstance(cell, (int, np.integer))
                      else fmt_float(cell)) for cell in row]
            fh.write(",".join(cells) + "\n")
