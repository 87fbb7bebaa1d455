import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from floatplane.numeric import (
    DOUBLE,
    POW10,
    SINGLE,
    FloatBits,
    Precision,
    bits_as_integer,
    conversion_error,
    decimal_round_scale,
    dp_ds_calculate,
    floor_log10,
    integer_as_bits,
    inverse_scale,
    ulp,
)
from floatplane.oracle import dp_oracle

KNOWN = [
    (0.0, (0, 0)),
    (-0.0314, (4, 3)),
    (1.11, (2, 3)),
    (111.0, (0, 3)),
    (1.02, (2, 3)),
    (9.110900773177071, (23, 16)),
    (1.23456789876543e-9, (23, 16)),
]


@pytest.mark.parametrize("v,expected", KNOWN)
def test_dp_ds_known_values(v, expected):
    assert tuple(dp_ds_calculate(v)[:2]) == expected


def test_sentinels_and_bounds():
    assert DOUBLE.sentinel == (23, 16)
    assert SINGLE.sentinel == (11, 7)
    assert (DOUBLE.max_alpha, DOUBLE.max_beta) == (22, 15)
    assert (SINGLE.max_alpha, SINGLE.max_beta) == (10, 6)
    assert dp_ds_calculate(9.110900773177071).is_exception
    assert not dp_ds_calculate(1.02).is_exception


@pytest.mark.parametrize("v", [-0.0, math.nan, math.inf, -math.inf, 5e-324, 2.2250738585072e-308])
def test_special_values_are_exceptions(v):
    assert tuple(dp_ds_calculate(v)[:2]) == (23, 16)


@pytest.mark.parametrize("v", [-0.0, np.nan, np.inf, 1e-45])
def test_special_values_single(v):
    assert tuple(dp_ds_calculate(np.float32(v), SINGLE)[:2]) == (11, 7)


def test_value_just_below_a_power_of_ten():
    # the double nearest 1e-20 is slightly below it, yet the significand is 1
    assert Fraction(1e-20) < Fraction(1, 10**20)
    assert tuple(dp_ds_calculate(1e-20)[:2]) == (20, 1)


@pytest.mark.parametrize("k", range(-20, 23))
def test_floor_log10_at_decades(k):
    v = float(Fraction(10) ** k)
    expected = k if Fraction(v) >= Fraction(10) ** k else k - 1
    assert floor_log10(v) == expected
    assert floor_log10(1000.0) == 3


@given(st.floats(min_value=1e-300, max_value=1e300))
def test_floor_log10_exact(v):
    k = floor_log10(v)
    x = Fraction(v)
    assert Fraction(10) ** k <= x < Fraction(10) ** (k + 1)


def test_ulp_examples():
    assert ulp(1.0) == 2.0**-52
    assert ulp(1.9999) == 2.0**-52
    assert 1.11 * 100 == 111.00000000000001
    assert 111.00000000000001 - 111.0 == ulp(111.0)
    assert ulp(np.float32(1.0), SINGLE) == 2.0**-23


@pytest.mark.parametrize("v", [0.0, -0.0, 5e-324, math.inf, math.nan])
def test_ulp_rejects_undefined(v):
    with pytest.raises(ValueError):
        ulp(v)


@given(st.floats(min_value=2.2250738585072014e-308, max_value=1.7e308))
def test_ulp_brackets_relative_spacing(v):
    u = Fraction(ulp(v))
    # exact: v * 2**-52 underflows to a rounded subnormal near the bottom of the range
    assert u <= Fraction(v) / 2**52 < 2 * u
    assert Fraction(math.nextafter(v, math.inf)) - Fraction(v) in (u, 2 * u)


def test_decimal_round_scale_examples():
    assert decimal_round_scale(-1.2, 2) == -120
    assert decimal_round_scale(2.5, 1) == 25
    assert decimal_round_scale(8.04, 2) == 804
    assert 8.04 * 100 != 804.0  # the product lands below and rounding recovers it
    with pytest.raises(OverflowError):
        decimal_round_scale(1e300, 0)
    with pytest.raises(ValueError):
        decimal_round_scale(1.0, 23)


def test_round_is_half_away_from_zero():
    assert decimal_round_scale(0.5, 0) == 1
    assert decimal_round_scale(-0.5, 0) == -1
    assert decimal_round_scale(2.5, 0) == 3
    assert decimal_round_scale(-2.5, 0) == -3


def test_inverse_scale_examples():
    assert inverse_scale(-120, 2) == -1.2
    assert inverse_scale(0, 7) == 0.0
    assert bits_as_integer(inverse_scale(804, 2)) == bits_as_integer(8.04)


def test_bit_reinterpretation_examples():
    assert bits_as_integer(0.0) == 0
    assert bits_as_integer(-0.0) == 1 << 63
    assert bits_as_integer(1.0) == 0x3FF0000000000000
    assert bits_as_integer(np.float32(1.0), SINGLE) == 0x3F800000
    with pytest.raises(ValueError):
        integer_as_bits(1 << 64)


@given(st.integers(0, 2**64 - 1))
def test_bits_round_trip_double(u):
    assert bits_as_integer(integer_as_bits(u)) == u
    fb = FloatBits.from_float(integer_as_bits(u))
    assert fb.to_integer() == u
    assert bits_as_integer(fb.to_float()) == u


@given(st.integers(0, 2**32 - 1))
def test_bits_round_trip_single(u):
    assert bits_as_integer(integer_as_bits(u, SINGLE), SINGLE) == u


@given(st.floats(min_value=2.2250738585072014e-308, max_value=1e308).map(lambda x: x))
def test_field_reconstruction_normals(v):
    fb = FloatBits.from_float(v)
    assert fb.value() == v
    assert fb.exponent - DOUBLE.bias == math.frexp(v)[1] - 1


def test_precision_codes():
    assert Precision.from_code(DOUBLE.code) is DOUBLE
    assert Precision.from_bits(32) is SINGLE
    with pytest.raises(ValueError):
        Precision.from_code(7)
    assert POW10[22] == 1e22 and POW10[10] == float(np.float32(1e10))


@st.composite
def decimals(draw, max_digits=15, max_alpha=22):
    digits = draw(st.integers(1, max_digits))
    m = draw(st.integers(10 ** (digits - 1), 10**digits - 1))
    a = draw(st.integers(0, max_alpha))
    sign = draw(st.sampled_from([1, -1]))
    return sign * m / 10**a


@given(decimals())
def test_dp_ds_matches_string_oracle(v):
    o = dp_oracle(v)
    got = dp_ds_calculate(v)
    assert tuple(got[:2]) == (o if o is not None else DOUBLE.sentinel)


@given(decimals(max_digits=7, max_alpha=11))
def test_dp_ds_matches_string_oracle_single(v):
    f = np.float32(v)
    o = dp_oracle(f, SINGLE)
    got = dp_ds_calculate(f, SINGLE)
    assert tuple(got[:2]) == (o if o is not None else SINGLE.sentinel)


@given(decimals())
def test_accepted_values_scale_and_return_exactly(v):
    meta = dp_ds_calculate(v)
    if meta.is_exception or v == 0:
        return
    g = decimal_round_scale(v, meta.alpha)
    assert abs(g) < 10**15
    assert bits_as_integer(inverse_scale(g, meta.alpha)) == bits_as_integer(v)
    assert meta.beta == len(str(abs(g)))


@given(decimals())
def test_stopping_rule_first_hit_is_the_decimal_place(v):
    o = dp_oracle(v)
    if o is None or v == 0:
        return
    alpha = o[0]
    for i in range(alpha):
        err, bound = conversion_error(v, i)
        assert err > bound
    err, bound = conversion_error(v, alpha)
    assert err <= bound
