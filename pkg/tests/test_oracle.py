from decimal import Decimal

import numpy as np
import pytest

from floatplane.numeric import DOUBLE, SINGLE
from floatplane.oracle import (
    KINDS,
    SyntheticSpec,
    dp_oracle,
    generate,
    naive_offsets,
    parse_spec,
    shortest_decimal,
)
from floatplane.transform import analyze_chunk, forward_transform


def test_dp_oracle_examples():
    assert dp_oracle(1.02) == (2, 3)
    assert dp_oracle(111.0) == (0, 3)
    assert dp_oracle(0.0) == (0, 0)
    assert dp_oracle(-0.0314) == (4, 3)
    assert dp_oracle(1.23456789876543e-9) is None
    assert dp_oracle(float("nan")) is None
    assert dp_oracle(np.float32(1.1), SINGLE) == (1, 2)
    assert dp_oracle(np.float32(1.2345678), SINGLE) is None


def test_shortest_decimal_single_differs_from_double():
    f = np.float32(0.1)
    assert shortest_decimal(f, SINGLE) == Decimal("0.1")
    assert shortest_decimal(float(f), DOUBLE) != shortest_decimal(f, SINGLE)


def test_naive_offsets():
    assert naive_offsets([3, 0, 5]) == [0, 3, 3]
    assert naive_offsets([]) == []


@pytest.mark.parametrize("kind", KINDS)
def test_generation_is_deterministic(kind):
    spec = SyntheticSpec(kind=kind, value_count=5000, seed=9)
    a, b = generate(spec), generate(spec)
    assert a.view(np.uint64).tolist() == b.view(np.uint64).tolist()
    c = generate(SyntheticSpec(kind=kind, value_count=5000, seed=10))
    assert not np.array_equal(a.view(np.uint64), c.view(np.uint64))


def test_fixed_decimal_has_exact_places():
    vals = generate(SyntheticSpec("fixed-decimal", decimal_places=2, value_count=20000, seed=1))
    metas = [dp_oracle(v) for v in vals]
    assert all(m is not None and m[0] == 2 for m in metas)


def test_uniform_bits_hits_special_classes():
    vals = generate(SyntheticSpec("uniform-bits", value_count=200000, seed=2))
    assert np.isnan(vals).any()
    # about 1 in 2048 patterns has an all-zero or all-one exponent
    bits = vals.view(np.uint64)
    exp = (bits >> np.uint64(52)) & np.uint64(0x7FF)
    assert (exp == 0).any() and (exp == 0x7FF).any()
    inf = np.array([0x7FF0000000000000], dtype=np.uint64).view(np.float64)
    assert np.isinf(inf).all()  # infinities are two patterns out of 2**64; covered by tests elsewhere


def test_random_walk_planes_are_narrow():
    vals = generate(SyntheticSpec("random-walk", decimal_places=2, value_count=1025 * 200, seed=4))
    widths = []
    for c in range(200):
        chunk = vals[c * 1025:(c + 1) * 1025]
        h = analyze_chunk(chunk)
        assert not h.is_case2
        z = forward_transform(chunk, h)
        widths.append(int(np.bitwise_or.reduce(z[1:])).bit_length())
    assert max(widths) <= 9


def test_outliers_one_per_chunk():
    base = generate(SyntheticSpec("random-walk", value_count=1025 * 10, seed=5))
    spiked = generate(SyntheticSpec("outlier-injected", value_count=1025 * 10, seed=5))
    diff = spiked != base
    assert diff.reshape(10, 1025).sum(axis=1).tolist() == [1] * 10


def test_sign_flip_alternates():
    vals = generate(SyntheticSpec("sign-flip", value_count=1000, seed=6, start=500.0))
    nz = vals[vals != 0]
    assert (np.sign(nz[::2]) > 0).all()


def test_parse_spec():
    s = parse_spec("random-walk:decimals=3,count=10,seed=4,step=0.5")
    assert (s.kind, s.decimal_places, s.value_count, s.seed, s.step) == ("random-walk", 3, 10, 4, 0.5)
    with pytest.raises(ValueError):
        parse_spec("random-walk:bogus=1")
    with pytest.raises(ValueError):
        parse_spec("white-noise")


def test_single_precision_generation():
    vals = generate(SyntheticSpec("fixed-decimal", value_count=100, precision=SINGLE))
    assert vals.dtype == np.float32
