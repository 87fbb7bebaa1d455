"""IEEE-754 micro-operations and exact decimal-place analysis.

Everything that needs working-precision rounding (the scaled product
``v * 10**a`` and the quotient ``g / 10**a``) is done by numba kernels so the
same code path serves the scalar API here and the chunk codec.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from numba import njit


class Precision(enum.Enum):
    DOUBLE = 64
    SINGLE = 32

    @property
    def bits(self) -> int:
        return self.value

    @property
    def exponent_bits(self) -> int:
        return 11 if self is Precision.DOUBLE else 8

    @property
    def mantissa_bits(self) -> int:
        return 52 if self is Precision.DOUBLE else 23

    @property
    def bias(self) -> int:
        return (1 << (self.exponent_bits - 1)) - 1

    @property
    def max_alpha(self) -> int:
        return 22 if self is Precision.DOUBLE else 10

    @property
    def max_beta(self) -> int:
        return 15 if self is Precision.DOUBLE else 6

    @property
    def sentinel(self) -> tuple[int, int]:
        return self.max_alpha + 1, self.max_beta + 1

    @property
    def float_dtype(self) -> np.dtype:
        return np.dtype(np.float64 if self is Precision.DOUBLE else np.float32)

    @property
    def uint_dtype(self) -> np.dtype:
        return np.dtype(np.uint64 if self is Precision.DOUBLE else np.uint32)

    @property
    def is_single(self) -> bool:
        return self is Precision.SINGLE

    @property
    def code(self) -> int:
        """Archive header code: 0 = double, 1 = single."""
        return 0 if self is Precision.DOUBLE else 1

    @classmethod
    def from_code(cls, code: int) -> "Precision":
        if code == 0:
            return cls.DOUBLE
        if code == 1:
            return cls.SINGLE
        raise ValueError(f"unknown precision code {code}")

    @classmethod
    def from_bits(cls, bits: int) -> "Precision":
        return cls(int(bits))


DOUBLE = Precision.DOUBLE
SINGLE = Precision.SINGLE

# 10**0 .. 10**22 are exact doubles; 10**0 .. 10**10 are also exact float32
# (5**10 < 2**24), so one float64 table serves both precisions.
POW10 = np.array([float(10**k) for k in range(23)], dtype=np.float64)

_LG_MIN = -330
_LG_MAX = 310


def _decade_ceilings() -> np.ndarray:
    # entry k - _LG_MIN is the smallest double >= 10**k, so for any double x:
    # x >= 10**k  <=>  x >= entry
    out = np.empty(_LG_MAX - _LG_MIN + 1, dtype=np.float64)
    for i, k in enumerate(range(_LG_MIN, _LG_MAX + 1)):
        exact = Fraction(10) ** k
        try:
            f = float(exact)
        except OverflowError:
            f = math.inf
        if f != math.inf and Fraction(f) < exact:
            f = math.nextafter(f, math.inf)
        out[i] = f
    return out


_CEIL = _decade_ceilings()
_LOG10_2 = 0.30102999566398120


@njit(cache=True, nogil=True)
def floor_log10_kernel(x):
    """Exact floor(log10(x)) for a positive finite float64 ``x``."""
    _, e = math.frexp(x)
    idx = int(math.floor((e - 1) * _LOG10_2)) - _LG_MIN
    while idx > 0 and x < _CEIL[idx]:
        idx -= 1
    while idx + 1 < _CEIL.shape[0] and x >= _CEIL[idx + 1]:
        idx += 1
    return idx + _LG_MIN


@njit(cache=True, nogil=True)
def round_half_away(x):
    t = np.int64(x)
    d = x - t
    if d >= 0.5:
        t += 1
    elif d <= -0.5:
        t -= 1
    return t


@njit(cache=True, nogil=True)
def scaled_product(v, a, single):
    """``v (x) 10**a`` rounded in working precision, widened to float64."""
    if single:
        return np.float64(np.float32(v) * np.float32(POW10[a]))
    return np.float64(v) * POW10[a]


@njit(cache=True, nogil=True)
def scaled_quotient(g, a, single):
    """``g / 10**a`` rounded in working precision, widened to float64."""
    if single:
        return np.float64(np.float32(g) / np.float32(POW10[a]))
    return np.float64(g) / POW10[a]


@njit(cache=True, nogil=True)
def dp_ds_kernel(v, single):
    """Decimal place and significand of ``v``; exceptions come back as the sentinel.

    The enumeration skips the alphas at which ``v * 10**alpha < 0.1``: there the
    nearest integer is 0 and the rounding error is ``|x|``, which can never meet
    the stopping rule, so the result is unchanged and the loop runs at most
    ``max_beta + 1`` times.
    """
    if single:
        max_alpha, max_beta, eps, tiny = 10, 6, 2.0**-23, 1.1754943508222875e-38
        huge = 3.4028234663852886e38
    else:
        max_alpha, max_beta, eps, tiny = 22, 15, 2.0**-52, 2.2250738585072014e-308
        huge = 1.7976931348623157e308
    if v == 0:
        if math.copysign(1.0, v) < 0:
            return max_alpha + 1, max_beta + 1
        return 0, 0
    a = abs(np.float64(v))
    if not (a >= tiny and a <= huge):
        return max_alpha + 1, max_beta + 1
    lg = floor_log10_kernel(a)
    alpha = 0 if lg >= -1 else -lg - 1
    beta = alpha + lg + 1
    while beta <= max_beta and alpha <= max_alpha:
        x = scaled_product(v, alpha, single)
        r = round_half_away(x)
        if abs(x - r) <= abs(x) * eps:
            if scaled_quotient(r, alpha, single) != v:
                return max_alpha + 1, max_beta + 1
            # r is the exact scaled integer; its digit count is the significand
            # even when the binary v sits just below a power of ten (1e-20)
            return alpha, floor_log10_kernel(abs(np.float64(r))) + 1
        alpha += 1
        beta += 1
    return max_alpha + 1, max_beta + 1


class DecimalMeta(NamedTuple):
    alpha: int
    beta: int
    precision: Precision = DOUBLE

    @property
    def is_exception(self) -> bool:
        return self.alpha > self.precision.max_alpha or self.beta > self.precision.max_beta


@dataclass(frozen=True)
class FloatBits:
    sign: int
    exponent: int
    mantissa: int
    precision: Precision = DOUBLE

    @classmethod
    def from_float(cls, v, precision: Precision = DOUBLE) -> "FloatBits":
        u = bits_as_integer(v, precision)
        m = precision.mantissa_bits
        return cls(
            sign=u >> (precision.bits - 1),
            exponent=(u >> m) & ((1 << precision.exponent_bits) - 1),
            mantissa=u & ((1 << m) - 1),
            precision=precision,
        )

    def to_integer(self) -> int:
        p = self.precision
        return (self.sign << (p.bits - 1)) | (self.exponent << p.mantissa_bits) | self.mantissa

    def to_float(self):
        return integer_as_bits(self.to_integer(), self.precision)

    def value(self) -> float:
        """Reconstruct a normal number from its fields, term by term."""
        p = self.precision
        frac = Fraction(self.mantissa, 1 << p.mantissa_bits)
        mag = (1 + frac) * Fraction(2) ** (self.exponent - p.bias)
        return float(-mag if self.sign else mag)


def bits_as_integer(v, precision: Precision = DOUBLE) -> int:
    return int(np.array(v, dtype=precision.float_dtype).view(precision.uint_dtype))


def integer_as_bits(u: int, precision: Precision = DOUBLE):
    if not 0 <= u < (1 << precision.bits):
        raise ValueError(f"{u} is not a {precision.bits}-bit pattern")
    return np.array(u, dtype=precision.uint_dtype).view(precision.float_dtype)[()]


def _check_normal(v, precision: Precision) -> float:
    f = float(v)
    if not math.isfinite(f) or f == 0 or abs(f) < np.finfo(precision.float_dtype).tiny:
        raise ValueError(f"ulp undefined for {v!r}")
    return f


def ulp(v, precision: Precision = DOUBLE) -> float:
    """Weight of the last mantissa bit in the binade of ``v`` (normal numbers only)."""
    f = _check_normal(v, precision)
    _, e = math.frexp(abs(f))
    return math.ldexp(1.0, e - 1 - precision.mantissa_bits)


def floor_log10(v) -> int:
    f = abs(float(v))
    if not math.isfinite(f) or f == 0:
        raise ValueError(f"log10 undefined for {v!r}")
    return int(floor_log10_kernel(f))


def dp_ds_calculate(v, precision: Precision = DOUBLE) -> DecimalMeta:
    v = precision.float_dtype.type(v)
    alpha, beta = dp_ds_kernel(v, precision.is_single)
    return DecimalMeta(int(alpha), int(beta), precision)


def decimal_round_scale(v, a: int, precision: Precision = DOUBLE) -> int:
    """round(v (x) 10**a), half away from zero, as a Python int."""
    if not 0 <= a <= precision.max_alpha:
        raise ValueError(f"decimal place {a} outside 0..{precision.max_alpha}")
    x = scaled_product(precision.float_dtype.type(v), a, precision.is_single)
    if not abs(x) < 2.0**63:
        raise OverflowError(f"round({v!r} * 10**{a}) does not fit in 63 bits")
    return int(round_half_away(x))


def inverse_scale(g: int, a: int, precision: Precision = DOUBLE):
    if not 0 <= a <= precision.max_alpha:
        raise ValueError(f"decimal place {a} outside 0..{precision.max_alpha}")
    q = scaled_quotient(np.int64(g), a, precision.is_single)
    return precision.float_dtype.type(q)


def conversion_error(v, i: int, precision: Precision = DOUBLE) -> tuple[float, float]:
    """(error, bound) for the scaled product at decimal place ``i``.

    error = |v (x) 10**i - round(v (x) 10**i)| and bound = |v (x) 10**i| * 2**-p,
    with p the mantissa width; the enumeration in dp_ds_calculate stops at the
    first ``i`` where error <= bound.
    """
    x = scaled_product(precision.float_dtype.type(v), i, precision.is_single)
    r = float(round_half_away(x))
    return abs(x - r), abs(x) * 2.0 ** -precision.mantissa_bits
