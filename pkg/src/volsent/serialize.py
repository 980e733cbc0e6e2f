"""Plain-text dumps of named arrays.

Each array is a header line ``name d1 d2 ...`` followed by its values, one
line per leading-axis slice (a single line for scalars and vectors).
"""
from __future__ import annotations

import numpy as np


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(values))


def arrays_to_text(arrays: dict) -> str:
    out = []
    for name, arr in arrays.items():
        arr = np.asarray(arr, dtype=float)
        out.append(" ".join([name] + [str(d) for d in arr.shape]))
        if arr.ndim <= 1:
            out.append(_fmt(arr))
        else:
            out.extend(_fmt(row) for row in arr.reshape(arr.shape[0], -1))
    return "\n".join(out) + "\n"


def arrays_from_text(text: str) -> dict:
    lines = text.splitlines()
    arrays = {}
    i = 0
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        head = lines[i].split()
        name, shape = head[0], tuple(int(d) for d in head[1:])
        n_lines = 1 if len(shape) <= 1 else shape[0]
        values = [float(v) for line in lines[i + 1:i + 1 + n_lines] for v in line.split()]
        arrays[name] = np.array(values).reshape(shape)
        i += 1 + n_lines
    return arrays
