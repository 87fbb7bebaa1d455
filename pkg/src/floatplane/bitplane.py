"""Adaptive transposed bit-plane coding of z[1:].

Row 0 of the plane image is the most significant retained bit. Within a row the
bit for value j (0-based over z[1:]) lives in byte j // 8 at bit 7 - j % 8.
A row is stored sparse (bitmap of non-zero bytes + those bytes) when it has
more than (n-1)/64 zero bytes, dense (raw bytes) otherwise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numba import njit

_U0 = np.uint64(0)
_U1 = np.uint64(1)
_M7 = np.uint64(0x00AA00AA00AA00AA)
_M14 = np.uint64(0x0000CCCC0000CCCC)
_M28 = np.uint64(0x00000000F0F0F0F0)
_S7 = np.uint64(7)
_S14 = np.uint64(14)
_S28 = np.uint64(28)
_FF = np.uint64(0xFF)


class Scheme(enum.IntEnum):
    SPARSE = 0
    DENSE = 1


class TruncatedRowsError(ValueError):
    pass


@njit(cache=True, nogil=True)
def transpose8(x):
    """Transpose an 8x8 bit matrix packed MSB-first, row 0 in the top byte."""
    t = (x ^ (x >> _S7)) & _M7
    x = x ^ t ^ (t << _S7)
    t = (x ^ (x >> _S14)) & _M14
    x = x ^ t ^ (t << _S14)
    t = (x ^ (x >> _S28)) & _M28
    x = x ^ t ^ (t << _S28)
    return x


@njit(cache=True, nogil=True)
def plane_width(z):
    acc = _U0
    for i in range(1, z.shape[0]):
        acc |= z[i]
    w = 0
    while acc:
        acc >>= _U1
        w += 1
    return w


@njit(cache=True, nogil=True)
def transpose_kernel(z, w, rows):
    """Fill rows[0:w] with the bit planes of z[1:] (z[0] is not part of M)."""
    m = z.shape[0] - 1
    nq = (w + 7) // 8
    for j in range(m // 8):
        base = 1 + 8 * j
        for q in range(nq):
            sh = np.uint64(8 * q)
            x = _U0
            for k in range(8):
                x |= ((z[base + k] >> sh) & _FF) << np.uint64(8 * (7 - k))
            x = transpose8(x)
            for t in range(8):
                b = 8 * q + 7 - t
                if b < w:
                    rows[w - 1 - b, j] = np.uint8((x >> np.uint64(8 * (7 - t))) & _FF)


@njit(cache=True, nogil=True)
def untranspose_kernel(rows, w, z):
    """Inverse of transpose_kernel; writes z[1:], leaves z[0] alone."""
    m = z.shape[0] - 1
    nq = (w + 7) // 8
    for j in range(m // 8):
        base = 1 + 8 * j
        for k in range(8):
            z[base + k] = _U0
        for q in range(nq):
            x = _U0
            for t in range(8):
                b = 8 * q + 7 - t
                if b < w:
                    x |= np.uint64(rows[w - 1 - b, j]) << np.uint64(8 * (7 - t))
            x = transpose8(x)
            sh = np.uint64(8 * q)
            for k in range(8):
                z[base + k] |= ((x >> np.uint64(8 * (7 - k))) & _FF) << sh


@njit(cache=True, nogil=True)
def zero_bytes(row):
    c = 0
    for b in row:
        if b == 0:
            c += 1
    return c


@njit(cache=True, nogil=True)
def encode_rows_kernel(rows, w, out, pos):
    """Serialize rows[0:w] at out[pos:]; returns (new pos, dense flag word)."""
    rowbytes = rows.shape[1]
    mapbytes = rowbytes // 8
    flags = _U0
    for r in range(w):
        row = rows[r]
        lam = zero_bytes(row)
        if lam > mapbytes:
            for i in range(mapbytes):
                out[pos + i] = 0
            p = pos + mapbytes
            for j in range(rowbytes):
                if row[j] != 0:
                    out[pos + j // 8] |= np.uint8(0x80 >> (j % 8))
                    out[p] = row[j]
                    p += 1
            pos = p
        else:
            flags |= _U1 << np.uint64(w - 1 - r)
            for j in range(rowbytes):
                out[pos + j] = row[j]
            pos += rowbytes
    return pos, flags


@njit(cache=True, nogil=True)
def decode_rows_kernel(buf, pos, end, w, flags, rows):
    """Parse w rows from buf[pos:end] into rows; returns new pos or -1 if truncated."""
    rowbytes = rows.shape[1]
    mapbytes = rowbytes // 8
    for r in range(w):
        if (flags >> np.uint64(w - 1 - r)) & _U1:
            if pos + rowbytes > end:
                return -1
            for j in range(rowbytes):
                rows[r, j] = buf[pos + j]
            pos += rowbytes
        else:
            if pos + mapbytes > end:
                return -1
            p = pos + mapbytes
            for j in range(rowbytes):
                if buf[pos + j // 8] & (0x80 >> (j % 8)):
                    if p >= end:
                        return -1
                    rows[r, j] = buf[p]
                    p += 1
                else:
                    rows[r, j] = 0
            pos = p
    return pos


def select_scheme(lam: int, n: int) -> Scheme:
    """Sparse iff it is strictly cheaper: lam > (n-1)/64."""
    return Scheme.SPARSE if lam > (n - 1) // 64 else Scheme.DENSE


def row_cost(lam: int, n: int) -> int:
    rowbytes = (n - 1) // 8
    if select_scheme(lam, n) is Scheme.SPARSE:
        return (n - 1) // 64 + rowbytes - lam
    return rowbytes


@dataclass
class BitPlanes:
    """Transposed plane image of z[1:] for one chunk of ``n`` values."""

    width: int
    rows: np.ndarray  # (width, (n-1)/8) uint8
    n: int

    @property
    def zero_counts(self) -> np.ndarray:
        return (self.rows == 0).sum(axis=1)

    @property
    def schemes(self) -> list[Scheme]:
        return [select_scheme(int(lam), self.n) for lam in self.zero_counts]

    @property
    def encoded_size(self) -> int:
        return sum(row_cost(int(lam), self.n) for lam in self.zero_counts)


def build_planes(z) -> BitPlanes:
    z = np.ascontiguousarray(z, dtype=np.uint64)
    n = z.shape[0]
    if (n - 1) % 64:
        raise ValueError(f"plane image needs n = k*64 + 1 values, got {n}")
    w = plane_width(z)
    rows = np.zeros((w, (n - 1) // 8), dtype=np.uint8)
    transpose_kernel(z, w, rows)
    return BitPlanes(w, rows, n)


def untranspose(planes: BitPlanes, z1: int = 0) -> np.ndarray:
    z = np.zeros(planes.n, dtype=np.uint64)
    z[0] = z1
    untranspose_kernel(np.ascontiguousarray(planes.rows), planes.width, z)
    return z


def encode_rows(planes: BitPlanes) -> tuple[bytes, int]:
    """Row payload bytes and the dense-flag word (bit w-1-r set when row r is dense)."""
    out = np.zeros(planes.width * planes.rows.shape[1] if planes.width else 0, dtype=np.uint8)
    end, flags = encode_rows_kernel(planes.rows, planes.width, out, 0)
    return out[:end].tobytes(), int(flags)


def decode_rows(data: bytes, width: int, flags: int, n: int) -> tuple[BitPlanes, int]:
    """Inverse of encode_rows; returns the planes and the number of bytes consumed."""
    buf = np.frombuffer(data, dtype=np.uint8)
    rows = np.zeros((width, (n - 1) // 8), dtype=np.uint8)
    end = decode_rows_kernel(buf, 0, buf.shape[0], width, np.uint64(flags), rows)
    if end < 0:
        raise TruncatedRowsError("row data ends before all planes are read")
    return BitPlanes(width, rows, n), int(end)
