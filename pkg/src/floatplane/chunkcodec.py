"""Compressed chunk image.

Layout (all single bytes unless noted)::

    alpha_max | beta_hat_max | z1 (8 bytes LE) | w | flags (ceil(w/8) bytes, BE) | rows...

Flag bit ``w - i`` (0 = least significant) describes row ``i`` (1-based):
0 = sparse, 1 = dense.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .bitplane import (
    decode_rows_kernel,
    encode_rows_kernel,
    plane_width,
    transpose_kernel,
    untranspose_kernel,
)
from .numeric import DOUBLE, Precision
from .transform import DEFAULT_CHUNK_N, analyze_kernel, check_chunk_n, forward_kernel, inverse_kernel

HEADER_BYTES = 11

OK = 0
ERR_TRUNCATED = -1
ERR_HEADER = -2
ERR_WIDTH = -3
ERR_FLAGS = -4
ERR_TRAILING = -5
ERR_FIRST = -6

_MESSAGES = {
    ERR_TRUNCATED: "chunk data is truncated",
    ERR_HEADER: "alpha/beta header outside the precision bounds and not the sentinel",
    ERR_WIDTH: "bit width exceeds the lane width",
    ERR_FLAGS: "scheme flags have nonzero padding bits",
    ERR_TRAILING: "chunk has bytes past its last row",
    ERR_FIRST: "first value does not fit the lane width",
}

_FF = np.uint64(0xFF)


class CorruptChunkError(ValueError):
    pass


def chunk_size_bound(n: int = DEFAULT_CHUNK_N, precision: Precision = DOUBLE) -> int:
    """Largest possible chunk image: every row dense at full lane width."""
    return HEADER_BYTES + precision.bits // 8 + precision.bits * (n - 1) // 8


@njit(cache=True, nogil=True)
def encode_chunk_kernel(vals, bits, single, z, rows, out, pos):
    max_alpha = 10 if single else 22
    max_beta = 6 if single else 15
    a, b = analyze_kernel(vals, single)
    case2 = a > max_alpha or b > max_beta
    forward_kernel(vals, bits, a, case2, single, z)
    w = plane_width(z)
    out[pos] = a
    out[pos + 1] = b
    z1 = z[0]
    for i in range(8):
        out[pos + 2 + i] = np.uint8((z1 >> np.uint64(8 * i)) & _FF)
    out[pos + 10] = w
    nf = (w + 7) // 8
    transpose_kernel(z, w, rows)
    end, flags = encode_rows_kernel(rows, w, out, pos + 11 + nf)
    for i in range(nf):
        out[pos + 11 + i] = np.uint8((flags >> np.uint64(8 * (nf - 1 - i))) & _FF)
    return end


@njit(cache=True, nogil=True)
def decode_chunk_kernel(buf, pos, end, single, count, z, rows, out_f, out_u):
    max_alpha = 10 if single else 22
    max_beta = 6 if single else 15
    lane = 32 if single else 64
    if end - pos < 11:
        return ERR_TRUNCATED
    a = np.int64(buf[pos])
    b = np.int64(buf[pos + 1])
    case2 = a > max_alpha or b > max_beta
    if case2 and (a != max_alpha + 1 or b != max_beta + 1):
        return ERR_HEADER
    z1 = np.uint64(0)
    for i in range(8):
        z1 |= np.uint64(buf[pos + 2 + i]) << np.uint64(8 * i)
    if single and z1 >> np.uint64(32):
        return ERR_FIRST
    w = np.int64(buf[pos + 10])
    if w > lane:
        return ERR_WIDTH
    nf = (w + 7) // 8
    if pos + 11 + nf > end:
        return ERR_TRUNCATED
    flags = np.uint64(0)
    for i in range(nf):
        flags = (flags << np.uint64(8)) | np.uint64(buf[pos + 11 + i])
    if w < 64 and flags >> np.uint64(w):
        return ERR_FLAGS
    p = decode_rows_kernel(buf, pos + 11 + nf, end, w, flags, rows)
    if p < 0:
        return ERR_TRUNCATED
    if p != end:
        return ERR_TRAILING
    z[0] = z1
    untranspose_kernel(rows, w, z)
    inverse_kernel(z, a, case2, single, count, out_f, out_u)
    return OK


@njit(cache=True, nogil=True)
def compress_range_kernel(vals, bits, n, single, c0, c1, out, pos, sizes):
    """Encode chunks [c0, c1) back to back at out[pos:]; returns the end position."""
    z = np.empty(n, dtype=np.uint64)
    rows = np.zeros((64, (n - 1) // 8), dtype=np.uint8)
    for c in range(c0, c1):
        s = c * n
        end = encode_chunk_kernel(vals[s:s + n], bits[s:s + n], single, z, rows, out, pos)
        sizes[c] = end - pos
        pos = end
    return pos


@njit(cache=True, nogil=True)
def decompress_range_kernel(payload, offsets, sizes, n, single, c0, c1, out_f, out_u):
    """Decode chunks [c0, c1) into out[c*n:(c+1)*n]; returns (status, failing chunk)."""
    z = np.empty(n, dtype=np.uint64)
    rows = np.zeros((64, (n - 1) // 8), dtype=np.uint8)
    for c in range(c0, c1):
        s = c * n
        start = offsets[c]
        status = decode_chunk_kernel(
            payload, start, start + sizes[c], single, n, z, rows, out_f[s:s + n], out_u[s:s + n]
        )
        if status != OK:
            return status, c
    return OK, -1


def error_message(status: int) -> str:
    return _MESSAGES.get(status, f"unknown decode status {status}")


def compress_chunk(values, precision: Precision = DOUBLE) -> bytes:
    vals = np.ascontiguousarray(values, dtype=precision.float_dtype)
    n = check_chunk_n(vals.shape[0])
    out = np.zeros(chunk_size_bound(n, precision), dtype=np.uint8)
    sizes = np.zeros(1, dtype=np.int64)
    end = compress_range_kernel(
        vals, vals.view(precision.uint_dtype), n, precision.is_single, 0, 1, out, 0, sizes
    )
    return out[:end].tobytes()


def decompress_chunk(
    data, count: int | None = None, precision: Precision = DOUBLE, n: int = DEFAULT_CHUNK_N
) -> np.ndarray:
    """Decode one chunk image; the first ``count`` values are returned (default n)."""
    n = check_chunk_n(n)
    count = n if count is None else int(count)
    if not 0 <= count <= n:
        raise ValueError(f"count {count} outside 0..{n}")
    buf = np.frombuffer(data, dtype=np.uint8)
    out = np.zeros(n, dtype=precision.float_dtype)
    z = np.empty(n, dtype=np.uint64)
    rows = np.zeros((64, (n - 1) // 8), dtype=np.uint8)
    status = decode_chunk_kernel(
        buf, 0, buf.shape[0], precision.is_single, n, z, rows, out, out.view(precision.uint_dtype)
    )
    if status != OK:
        raise CorruptChunkError(error_message(status))
    return out[:count]
