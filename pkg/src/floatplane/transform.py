"""Chunk-level digit transformation: values -> integer vector Z and back.

Case 1 scales every value by ``10**alpha_max`` to an integer; Case 2 reinterprets
the raw bits and zigzags them. Both then store ``z1 = g1`` followed by zigzagged
deltas. Lanes are 64 bits for doubles and 32 bits for singles; all arithmetic
wraps modulo the lane width.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .numeric import (
    DOUBLE,
    Precision,
    dp_ds_kernel,
    round_half_away,
    scaled_product,
    scaled_quotient,
)

DEFAULT_CHUNK_N = 1025

_U0 = np.uint64(0)
_U1 = np.uint64(1)
_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_MASK32 = np.uint64(0xFFFFFFFF)


class MalformedHeaderError(ValueError):
    pass


@dataclass(frozen=True)
class ChunkHeader:
    alpha_max: int
    beta_hat_max: int
    precision: Precision = DOUBLE

    @property
    def is_case2(self) -> bool:
        p = self.precision
        return self.alpha_max > p.max_alpha or self.beta_hat_max > p.max_beta

    def validate(self) -> None:
        if self.is_case2 and (self.alpha_max, self.beta_hat_max) != self.precision.sentinel:
            raise MalformedHeaderError(
                f"header ({self.alpha_max}, {self.beta_hat_max}) exceeds "
                f"{self.precision.name.lower()} bounds but is not the sentinel"
            )


def check_chunk_n(n: int) -> int:
    n = int(n)
    if n < 65 or (n - 1) % 64:
        raise ValueError(f"chunk size must be k*64 + 1 with k >= 1, got {n}")
    return n


@njit(cache=True, nogil=True)
def lane_mask(single):
    return _MASK32 if single else _MASK64


@njit(cache=True, nogil=True)
def zigzag_lane(x, single):
    """Zigzag of the two's-complement lane value ``x`` (held in a uint64)."""
    mask = lane_mask(single)
    top = np.uint64(31) if single else np.uint64(63)
    sign = (x >> top) & _U1
    return ((x << _U1) ^ (_U0 - sign)) & mask


@njit(cache=True, nogil=True)
def unzigzag_lane(z, single):
    return ((z >> _U1) ^ (_U0 - (z & _U1))) & lane_mask(single)


def zigzag(x: int, bits: int = 64) -> int:
    """(x << 1) ^ (x >> bits-1) on a signed integer, wrapped to ``bits``."""
    mask = (1 << bits) - 1
    return ((x << 1) ^ (x >> (bits - 1))) & mask


def unzigzag(u: int, bits: int = 64) -> int:
    x = (u >> 1) ^ -(u & 1)
    x &= (1 << bits) - 1
    return x - (1 << bits) if x >> (bits - 1) else x


@njit(cache=True, nogil=True)
def analyze_kernel(vals, single):
    """(alpha_max, beta_hat_max) for one chunk; exceptions force the sentinel.

    beta_hat_max is alpha_max + floor(log10 v_max) + 1 with the logarithm taken of
    v_max's decimal form, i.e. alpha_max + max(beta_i - alpha_i) over nonzero v_i.
    """
    max_alpha = 10 if single else 22
    max_beta = 6 if single else 15
    amax = 0
    lead = -(1 << 30)
    for i in range(vals.shape[0]):
        a, b = dp_ds_kernel(vals[i], single)
        if a > max_alpha or b > max_beta:
            return max_alpha + 1, max_beta + 1
        if a > amax:
            amax = a
        if b > 0 and b - a > lead:
            lead = b - a
    if lead == -(1 << 30):
        return amax, 0
    bhat = amax + lead
    if bhat > max_beta:
        return max_alpha + 1, max_beta + 1
    return amax, bhat


@njit(cache=True, nogil=True)
def forward_kernel(vals, bits, alpha, case2, single, z):
    mask = lane_mask(single)
    prev = _U0
    for i in range(vals.shape[0]):
        if case2:
            g = zigzag_lane(np.uint64(bits[i]), single)
        else:
            g = np.uint64(round_half_away(scaled_product(vals[i], alpha, single))) & mask
        if i == 0:
            z[0] = g
        else:
            z[i] = zigzag_lane((g - prev) & mask, single)
        prev = g


@njit(cache=True, nogil=True)
def inverse_kernel(z, alpha, case2, single, count, out_f, out_u):
    mask = lane_mask(single)
    top = np.uint64(31) if single else np.uint64(63)
    g = _U0
    for i in range(count):
        if i == 0:
            g = z[0] & mask
        else:
            g = (g + unzigzag_lane(z[i], single)) & mask
        if case2:
            out_u[i] = unzigzag_lane(g, single)
        else:
            # sign-extend the lane to int64
            s = np.int64(g)
            if (g >> top) & _U1:
                s = np.int64(g | ~mask)
            out_f[i] = scaled_quotient(s, alpha, single)


def _as_chunk(values, precision: Precision) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=precision.float_dtype)
    if arr.ndim != 1:
        raise ValueError("a chunk is a one-dimensional sequence of values")
    return arr


def analyze_chunk(values, precision: Precision = DOUBLE) -> ChunkHeader:
    arr = _as_chunk(values, precision)
    a, b = analyze_kernel(arr, precision.is_single)
    return ChunkHeader(int(a), int(b), precision)


def forward_transform(values, header: ChunkHeader) -> np.ndarray:
    """Integer vector Z (uint64 lanes; only the low 32 bits used in single mode)."""
    p = header.precision
    arr = _as_chunk(values, p)
    z = np.empty(arr.shape[0], dtype=np.uint64)
    forward_kernel(arr, arr.view(p.uint_dtype), header.alpha_max, header.is_case2, p.is_single, z)
    return z


def inverse_transform(z, header: ChunkHeader, count: int | None = None) -> np.ndarray:
    header.validate()
    p = header.precision
    z = np.ascontiguousarray(z, dtype=np.uint64)
    count = z.shape[0] if count is None else int(count)
    if not 0 <= count <= z.shape[0]:
        raise ValueError(f"count {count} outside 0..{z.shape[0]}")
    out = np.zeros(count, dtype=p.float_dtype)
    inverse_kernel(z, header.alpha_max, header.is_case2, p.is_single, count, out, out.view(p.uint_dtype))
    return out
