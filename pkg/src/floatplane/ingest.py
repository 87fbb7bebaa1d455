"""Loading values from raw dumps and CSV columns."""

from __future__ import annotations

import csv
import os
from decimal import Decimal, InvalidOperation
from fractions import Fraction

import numpy as np

from .numeric import DOUBLE, Precision


def parse_float32(text: str) -> np.float32:
    """Correctly rounded float32 for a decimal string (no double rounding)."""
    text = text.strip()
    f = float(text)
    c = np.float32(f)
    if not np.isfinite(f):
        return c
    try:
        exact = Fraction(Decimal(text))
    except InvalidOperation:
        return c
    if not np.isfinite(c):
        return c
    best = c
    best_err = abs(Fraction(float(c)) - exact)
    for cand in (np.nextafter(c, np.float32(-np.inf)), np.nextafter(c, np.float32(np.inf))):
        if not np.isfinite(cand):
            continue
        err = abs(Fraction(float(cand)) - exact)
        even = int(np.array(cand).view(np.uint32)) % 2 == 0
        if err < best_err or (err == best_err and even):
            best, best_err = cand, err
    return best


def parse_value(text: str, precision: Precision = DOUBLE):
    if precision is DOUBLE:
        return np.float64(float(text))
    return parse_float32(text)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_csv_column(path, column: str | int = 0, precision: Precision = DOUBLE) -> np.ndarray:
    """One numeric column of a CSV file. ``column`` is a 0-based index or a header name.

    A first row whose selected cell is not a number is treated as a header.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        return np.zeros(0, dtype=precision.float_dtype)
    idx = column
    if isinstance(column, str) and not column.lstrip("-").isdigit():
        if column not in rows[0]:
            raise ValueError(f"{path}: no column named {column!r}")
        idx = rows[0].index(column)
        rows = rows[1:]
    else:
        idx = int(column)
        if idx >= len(rows[0]):
            raise ValueError(f"{path}: column {idx} out of range")
        if not _is_number(rows[0][idx]):
            rows = rows[1:]
    out = np.empty(len(rows), dtype=precision.float_dtype)
    for i, row in enumerate(rows):
        try:
            out[i] = parse_value(row[idx], precision)
        except (ValueError, IndexError):
            raise ValueError(f"{path}: row {i + 1} has no numeric value in column {idx}") from None
    return out


def read_raw(path, precision: Precision = DOUBLE) -> np.ndarray:
    size = os.path.getsize(path)
    if size % (precision.bits // 8):
        raise ValueError(f"{path}: {size} bytes is not a whole number of {precision.bits}-bit values")
    data = np.fromfile(path, dtype=precision.float_dtype.newbyteorder("<"))
    return data.astype(precision.float_dtype, copy=False)


def write_raw(path, values, precision: Precision = DOUBLE) -> None:
    np.ascontiguousarray(values, dtype=precision.float_dtype.newbyteorder("<")).tofile(path)
