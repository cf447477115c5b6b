"""Return-series ingestion from headed CSV files."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

__all__ = ["load_returns"]


def load_returns(path, *, column: str | int | None = None,
                 prices: bool = False) -> np.ndarray:
    """Ordered series from a CSV file with a header row.

    `column` picks the series by header name or 0-based position; a
    one-column file needs no selection.  Lines starting with `#` are
    metadata comments and are skipped, so files written by the CLI load
    back unchanged.  With `prices=True` the column holds price levels
    p_t and the result is 100 * (ln p_t - ln p_{t-1}), one entry shorter
    than the file.  Bad cells fail with their physical file row number.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such data file: {path}")
    with path.open(newline="") as fh:
        rows = [(lineno, row)
                for lineno, row in enumerate(csv.reader(fh), start=1)
                if not (row and row[0].lstrip().startswith("#"))]
    if not rows:
        raise ValueError(f"{path} is empty")
    header, data = rows[0][1], rows[1:]
    if column is None:
        if len(header) != 1:
            raise ValueError(f"{path} has columns {header}; pass column= "
                             "to pick one")
        idx = 0
    elif isinstance(column, int):
        if not 0 <= column < len(header):
            raise ValueError(f"column index {column} out of range for "
                             f"columns {header}")
        idx = column
    else:
        if column not in header:
            raise ValueError(f"no column {column!r} in {path}; available: "
                             f"{header}")
        idx = header.index(column)

    values = np.empty(len(data))
    linenos = [lineno for lineno, _ in data]
    for i, (rowno, row) in enumerate(data):
        cell = row[idx].strip() if idx < len(row) else ""
        try:
            v = float(cell)
        except ValueError:
            raise ValueError(f"unparseable value {cell!r} in column "
                             f"{header[idx]!r} at row {rowno} of {path}") from None
        if not math.isfinite(v):
            raise ValueError(f"non-finite value {cell!r} in column "
                             f"{header[idx]!r} at row {rowno} of {path}")
        values[i] = v
    if values.size == 0:
        raise ValueError(f"{path} has a header but no data rows")

    if not prices:
        return values
    if values.size < 2:
        raise ValueError("a price series needs at least 2 rows to form returns")
    bad = np.nonzero(values <= 0.0)[0]
    if bad.size:
        raise ValueError(f"price must be positive to take logs; row "
                         f"{linenos[bad[0]]} has {values[bad[0]]:g}")
    return 100.0 * np.diff(np.log(values))
