"""Independent reference paths and synthetic data.

Nothing in here touches the numba kernels: decimal places come from shortest
round-trip strings, scaled integers from exact ``Decimal`` arithmetic, and bit
planes are read out one character of a binary string at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from decimal import Decimal

import numpy as np

from .numeric import DOUBLE, Precision

KINDS = ("random-walk", "fixed-decimal", "sign-flip", "outlier-injected", "uniform-bits")


def shortest_decimal(v, precision: Precision = DOUBLE) -> Decimal:
    """Shortest decimal string that reads back as ``v`` in the given precision."""
    if precision is DOUBLE:
        text = repr(float(v))
    else:
        text = np.format_float_scientific(np.float32(v), unique=True)
    return Decimal(text)


def dp_oracle(v, precision: Precision = DOUBLE) -> tuple[int, int] | None:
    """(decimal place, decimal significand) from the shortest string, or None past the bounds."""
    f = float(v)
    if not math.isfinite(f):
        return None
    if f == 0:
        return 0, 0
    d = shortest_decimal(v, precision).normalize()
    alpha = max(0, -d.as_tuple().exponent)
    beta = alpha + d.adjusted() + 1
    if alpha > precision.max_alpha or beta > precision.max_beta:
        return None
    return alpha, beta


def _zz(x: int, bits: int) -> int:
    # zigzag by its arithmetic definition, on an already sign-interpreted x
    return (2 * x if x >= 0 else -2 * x - 1) % (1 << bits)


def _signed(u: int, bits: int) -> int:
    u %= 1 << bits
    return u - (1 << bits) if u >= 1 << (bits - 1) else u


def _raw_bits(v, precision: Precision) -> int:
    return int(np.array(v, dtype=precision.float_dtype).view(precision.uint_dtype))


def naive_integers(values, precision: Precision = DOUBLE) -> tuple[int, int, list[int]]:
    """(alpha_max, beta_hat_max, Z) computed the slow way."""
    L = precision.bits
    vals = np.asarray(values, dtype=precision.float_dtype)
    metas = []
    for v in vals:
        if v == 0 and math.copysign(1.0, float(v)) < 0:
            metas.append(None)
        else:
            metas.append(dp_oracle(v, precision))
    case2 = any(m is None for m in metas)
    if not case2:
        alpha = max(m[0] for m in metas)
        decs = [shortest_decimal(v, precision) for v in vals]
        vmax = max(abs(d) for d in decs)
        bhat = 0 if vmax == 0 else alpha + vmax.adjusted() + 1
        case2 = bhat > precision.max_beta
    if case2:
        alpha, bhat = precision.sentinel
        g = [_zz(_signed(_raw_bits(v, precision), L), L) for v in vals]
    else:
        g = []
        for d in decs:
            scaled = d.scaleb(alpha)
            if scaled != scaled.to_integral_value():
                raise AssertionError(f"{d} * 10**{alpha} is not an integer")
            g.append(int(scaled) % (1 << L))
    z = [g[0]] + [_zz(_signed(g[i] - g[i - 1], L), L) for i in range(1, len(g))]
    return alpha, bhat, z


def naive_offsets(sizes) -> list[int]:
    out = []
    total = 0
    for s in sizes:
        out.append(total)
        total += int(s)
    return out


def naive_chunk_codec(values, precision: Precision = DOUBLE) -> bytes:
    """Reference chunk encoder; must agree byte for byte with compress_chunk."""
    alpha, bhat, z = naive_integers(values, precision)
    n = len(z)
    m = n - 1
    rowbytes = m // 8
    mapbytes = m // 64
    w = max(x.bit_length() for x in z[1:]) if m else 0
    # column c of the 64-character binary strings is bit 63 - c of every value
    columns = list(zip(*(format(x, "064b") for x in z[1:])))
    flags = 0
    body = b""
    for r in range(w):
        bit = w - 1 - r
        plane = "".join(columns[63 - bit])
        row = int(plane, 2).to_bytes(rowbytes, "big")
        zeros = sum(1 for b in row if b == 0)
        if zeros > mapbytes:
            bitmap = "".join("1" if b else "0" for b in row)
            body += int(bitmap, 2).to_bytes(mapbytes, "big")
            body += bytes(b for b in row if b)
        else:
            flags |= 1 << (w - 1 - r)
            body += row
    head = bytes([alpha, bhat]) + z[0].to_bytes(8, "little") + bytes([w])
    return head + flags.to_bytes((w + 7) // 8, "big") + body


@dataclass(frozen=True)
class SyntheticSpec:
    kind: str = "random-walk"
    decimal_places: int = 2
    value_count: int = 1_000_000
    seed: int = 0
    step: float = 1.27
    outlier: float = 50.0
    chunk_n: int = 1025
    start: float = 100.0
    precision: Precision = DOUBLE

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {', '.join(KINDS)}")


_SPEC_KEYS = {
    "decimals": ("decimal_places", int),
    "decimal_places": ("decimal_places", int),
    "count": ("value_count", int),
    "value_count": ("value_count", int),
    "seed": ("seed", int),
    "step": ("step", float),
    "outlier": ("outlier", float),
    "chunk_n": ("chunk_n", int),
    "start": ("start", float),
}


def parse_spec(text: str, **defaults) -> SyntheticSpec:
    """Parse ``kind[:key=value,...]``, e.g. ``random-walk:decimals=2,count=1000``."""
    kind, _, rest = text.partition(":")
    spec = SyntheticSpec(kind=kind.strip(), **defaults)
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep or key not in _SPEC_KEYS:
            raise ValueError(f"bad spec item {item!r}")
        name, conv = _SPEC_KEYS[key]
        spec = replace(spec, **{name: conv(value)})
    return spec


def _walk_units(spec: SyntheticSpec, rng) -> np.ndarray:
    scale = 10**spec.decimal_places
    bound = int(round(spec.step * scale))
    steps = rng.integers(-bound, bound + 1, size=spec.value_count)
    return int(round(spec.start * scale)) + np.cumsum(steps)


def _to_values(units: np.ndarray, spec: SyntheticSpec) -> np.ndarray:
    # correctly rounded k / 10**d, then narrowed for single precision
    vals = units.astype(np.float64) / float(10**spec.decimal_places)
    return vals.astype(spec.precision.float_dtype)


def generate(spec: SyntheticSpec) -> np.ndarray:
    """Deterministic dataset for ``spec`` (same spec and seed, same array)."""
    rng = np.random.default_rng(spec.seed)
    n = spec.value_count
    p = spec.precision
    if spec.kind == "uniform-bits":
        dt = p.uint_dtype
        raw = rng.integers(0, np.iinfo(dt).max, size=n, dtype=dt, endpoint=True)
        return raw.view(p.float_dtype)
    if spec.kind == "fixed-decimal":
        d = spec.decimal_places
        digits = max(d + 1, min(p.max_beta, d + 3))
        m = rng.integers(1, 10**digits, size=n)
        m += (m % 10 == 0) * rng.integers(1, 10, size=n)
        m *= rng.choice(np.array([-1, 1]), size=n)
        return _to_values(m, spec)
    units = _walk_units(spec, rng)
    if spec.kind == "sign-flip":
        units = np.abs(units) * np.where(np.arange(n) % 2 == 0, 1, -1)
    elif spec.kind == "outlier-injected":
        jump = int(round(spec.outlier * 10**spec.decimal_places))
        for start in range(0, n, spec.chunk_n):
            span = min(spec.chunk_n, n - start)
            units[start + int(rng.integers(0, span))] += jump
    return _to_values(units, spec)
