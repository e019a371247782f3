"""Byte-stable JSON and CSV writers.

Floats are written with 17 significant digits, LF line endings, UTF-8, and no
locale formatting, so identical inputs give identical bytes.
"""
import json
import math
from pathlib import Path

import numpy as np


class NonFiniteError(ValueError):
    """Raised when a NaN reaches an output writer."""

    def __init__(self, where):
        super().__init__(f"NaN encountered in {where}")
        self.where = where


def fmt(x):
    x = float(x)
    if math.isnan(x):
        raise NonFiniteError("output value")
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _dump(obj, indent, level, out):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(fmt(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for i, (k, v) in enumerate(items):
            out.append(pad + json.dumps(str(k), ensure_ascii=False) + ": ")
            _dump(v, indent, level + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        # flat numeric rows stay on one line
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in seq):
            parts = []
            for v in seq:
                sub = []
                _dump(v, indent, level + 1, sub)
                parts.append("".join(sub))
            out.append("[" + ", ".join(parts) + "]")
            return
        out.append("[\n")
        for i, v in enumerate(seq):
            out.append(pad)
            _dump(v, indent, level + 1, out)
            out.append(",\n" if i < len(seq) - 1 else "\n")
        out.append(end + "]")
    elif hasattr(obj, "to_json"):
        _dump(obj.to_json(), indent, level, out)
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent=2):
    out = []
    _dump(obj, indent, 0, out)
    return "".join(out) + "\n"


def emit_json(obj, path):
    text = dumps(obj)
    Path(path).write_bytes(text.encode("utf-8"))
    return text


def csv_text(header, rows):
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (bool, np.bool_)):
                cells.append("true" if v else "false")
            elif isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            elif isinstance(v, (float, np.floating)):
                cells.append(fmt(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def emit_csv(header, rows, path):
    text = csv_text(header, rows)
    Path(path).write_bytes(text.encode("utf-8"))
    return text
