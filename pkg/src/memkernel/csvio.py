"""CSV emission for all solver products.

Period decimal separator, newline-terminated rows, mandatory header.
Floats are written with repr (shortest round-trip form), so reruns of a
deterministic pipeline produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

__all__ = [
    "write_columns",
    "write_timeseries",
    "write_field_long",
    "write_field_matrix",
    "write_text",
]


def _fmt(value):
    return repr(float(value))


def write_text(path, text):
    Path(path).write_text(text, encoding="ascii")


def write_columns(path, header, columns):
    """Write equal-length columns under a comma-separated header."""
    columns = [np.asarray(c, dtype=float) for c in columns]
    n = columns[0].shape[0]
    if any(c.shape[0] != n for c in columns):
        raise ValueError("column length mismatch")
    lines = [header]
    for i in range(n):
        lines.append(",".join(_fmt(c[i]) for c in columns))
    write_text(path, "\n".join(lines) + "\n")


def write_timeseries(path, t, values, header="t,value"):
    write_columns(path, header, [t, values])


def write_field_long(path, x, t, field):
    """Long format: one `x,t,value` row per node."""
    field = np.asarray(field, dtype=float)
    lines = ["x,t,value"]
    for n, tn in enumerate(t):
        for i, xi in enumerate(x):
            lines.append(f"{_fmt(xi)},{_fmt(tn)},{_fmt(field[n, i])}")
    write_text(path, "\n".join(lines) + "\n")


def write_field_matrix(path, x, t, field):
    """Matrix format: first row the x nodes, first column the t nodes."""
    field = np.asarray(field, dtype=float)
    lines = ["t\\x," + ",".join(_fmt(xi) for xi in x)]
    for n, tn in enumerate(t):
        lines.append(_fmt(tn) + "," + ",".join(_fmt(v) for v in field[n]))
    write_text(path, "\n".join(lines) + "\n")
