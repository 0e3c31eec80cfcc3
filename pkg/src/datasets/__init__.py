"""Load numeric CSV datasets."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pandas as pd

from src.errors import DataError


def _parse_cell(cell, line: int, column: int) -> float:
    if not isinstance(cell, str) or not cell.strip():
        raise DataError(f"line {line}: missing value in column {column}")
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"line {line}, column {column}: not a number: {cell.strip()!r}") from None
    if not math.isfinite(value):
        raise DataError(f"line {line}, column {column}: non-finite value {cell.strip()!r}")
    return value


def _is_number(cell) -> bool:
    try:
        float(cell)
    except (TypeError, ValueError):
        return False
    return True


def load_csv(path: str | Path) -> tuple[np.ndarray, list[str]]:
    """Read a comma-separated matrix with an optional header row.

    The first row is a header when any of its cells is not a number;
    otherwise columns are named x1..xd. Values are parsed with ``float``
    so a file written with round-trip precision reloads bit-identically.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    try:
        frame = pd.read_csv(
            path,
            header=None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
        )
    except pd.errors.EmptyDataError:
        raise DataError(f"{path}: empty file") from None
    except pd.errors.ParserError as exc:
        raise DataError(f"{path}: {str(exc).strip()}") from None
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not UTF-8 text (byte {exc.start})") from None

    rows = frame.to_numpy(dtype=object)
    # drop trailing blank lines
    while rows.shape[0] and all(not isinstance(c, str) or not c.strip() for c in rows[-1]):
        rows = rows[:-1]
    if rows.shape[0] == 0:
        raise DataError(f"{path}: empty file")

    first_line = 1
    if not all(_is_number(c) for c in rows[0]):
        names = [str(c).strip() for c in rows[0]]
        rows = rows[1:]
        first_line = 2
    else:
        names = [f"x{j + 1}" for j in range(rows.shape[1])]
    if rows.shape[0] == 0:
        raise DataError(f"{path}: no data rows")

    matrix = np.empty(rows.shape, dtype=np.float64)
    for i, row in enumerate(rows):
        for j, cell in enumerate(row):
            matrix[i, j] = _parse_cell(cell, first_line + i, j + 1)
    return matrix, names
