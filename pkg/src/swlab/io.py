"""Series CSV files: header ``t,<name>,...`` and one row per recorded sweep.

Floats are written with ``repr``, the shortest string that parses back to the
same double, so a write/read round trip is exact.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .dynamics import Series
from .errors import ParseError


def format_series(series: Series) -> str:
    names = series.names
    lines = [",".join(["t", *names])]
    cols = [series[n] for n in names]
    for k, t in enumerate(series.t):
        lines.append(",".join([str(int(t)), *(repr(float(c[k])) for c in cols)]))
    return "\n".join(lines) + "\n"


def write_series(path: str | Path, series: Series) -> None:
    for name in series.names:
        if "," in name or not name or name == "t":
            raise ParseError(f"column name {name!r} cannot be written to CSV")
    Path(path).write_text(format_series(series))


def parse_series(text: str) -> Series:
    rows = list(csv.reader(text.splitlines()))
    if not rows or not rows[0]:
        raise ParseError("missing header", line=1)
    header = rows[0]
    if header[0] != "t":
        raise ParseError(f"first column must be 't', got {header[0]!r}", line=1)
    if len(set(header)) != len(header):
        raise ParseError("duplicate column names", line=1)
    names = header[1:]
    t = np.empty(len(rows) - 1, dtype=np.int64)
    vals = np.empty((len(rows) - 1, len(names)))
    for k, row in enumerate(rows[1:]):
        line = k + 2
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(row)}", line=line)
        try:
            t[k] = int(row[0])
            vals[k] = [float(x) for x in row[1:]]
        except ValueError as exc:
            raise ParseError(str(exc), line=line) from exc
    return Series(t, {n: vals[:, j].copy() for j, n in enumerate(names)})


def read_series(path: str | Path) -> Series:
    return parse_series(Path(path).read_text())
