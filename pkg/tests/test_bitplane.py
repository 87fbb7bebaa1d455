import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from floatplane.bitplane import (
    Scheme,
    TruncatedRowsError,
    build_planes,
    decode_rows,
    encode_rows,
    row_cost,
    select_scheme,
    untranspose,
)


def naive_rows(z):
    z = [int(x) for x in z]
    m = len(z) - 1
    w = max(x.bit_length() for x in z[1:])
    rows = np.zeros((w, m // 8), dtype=np.uint8)
    for r in range(w):
        bit = w - 1 - r
        for j, x in enumerate(z[1:]):
            if (x >> bit) & 1:
                rows[r, j // 8] |= 0x80 >> (j % 8)
    return w, rows


def test_scheme_threshold():
    assert select_scheme(17, 1025) is Scheme.SPARSE
    assert select_scheme(16, 1025) is Scheme.DENSE
    assert select_scheme(8, 65) is Scheme.SPARSE
    assert row_cost(8, 65) == 1
    assert row_cost(16, 1025) == 128
    assert row_cost(128, 1025) == 16


@given(st.integers(0, 128))
def test_scheme_never_costs_more_than_dense(lam):
    sparse = 16 + 128 - lam
    assert row_cost(lam, 1025) == min(sparse, 128) or (sparse == 128 and row_cost(lam, 1025) == 128)


def test_zero_vector_has_no_planes():
    p = build_planes(np.zeros(1025, dtype=np.uint64))
    assert p.width == 0 and p.rows.shape == (0, 128)
    assert encode_rows(p) == (b"", 0)


def test_width_ten_example():
    z = np.zeros(65, dtype=np.uint64)
    z[1] = 600
    z[2:] = np.arange(63) % 3
    p = build_planes(z)
    assert p.width == 10 and p.rows.shape == (10, 8)
    assert p.rows[0].tolist() == [0x80, 0, 0, 0, 0, 0, 0, 0]
    data, flags = encode_rows(p)
    assert data[:2] == bytes([0b10000000, 0x80])
    assert not flags >> 9 & 1


def test_outlier_leaves_top_planes_mostly_zero():
    z = np.random.default_rng(1).integers(0, 16, size=1025).astype(np.uint64)
    z[500] = 7150
    p = build_planes(z)
    assert p.width == 13
    assert all(lam >= 127 for lam in p.zero_counts[:9])
    assert p.schemes[:9] == [Scheme.SPARSE] * 9


def test_all_zero_sparse_row_is_just_the_bitmap():
    z = np.zeros(1025, dtype=np.uint64)
    z[1:] = 1 << 5
    z[6] = 1 << 6
    p = build_planes(z)
    assert p.width == 7
    data, flags = encode_rows(p)
    # row 0: one set bit; row 1: all but one bit set (dense); rows 2..6 empty
    assert flags == 1 << 5
    assert data[:17] == bytes([0x80] + [0] * 15 + [0x04])
    assert data[17:145] == p.rows[1].tobytes()
    assert data[145:] == bytes(16 * 5)


@given(st.lists(st.integers(0, 2**64 - 1), min_size=64, max_size=64), st.integers(0, 2**64 - 1))
def test_transpose_matches_bitwise_reference(vals, first):
    z = np.array([first] + vals, dtype=np.uint64)
    p = build_planes(z)
    w, rows = naive_rows(z)
    assert p.width == w
    assert np.array_equal(p.rows, rows)
    assert np.array_equal(untranspose(p, first), z)


@given(
    st.integers(1, 4).flatmap(
        lambda k: st.lists(st.integers(0, 2**20), min_size=64 * k, max_size=64 * k)
    )
)
def test_rows_round_trip(vals):
    z = np.array([0] + vals, dtype=np.uint64)
    p = build_planes(z)
    data, flags = encode_rows(p)
    assert len(data) == p.encoded_size
    q, used = decode_rows(data + b"\xff", p.width, flags, p.n)
    assert used == len(data)
    assert np.array_equal(q.rows, p.rows)


def test_truncated_rows_raise():
    z = np.arange(65, dtype=np.uint64)
    p = build_planes(z)
    data, flags = encode_rows(p)
    for cut in (0, 1, len(data) - 1):
        with pytest.raises(TruncatedRowsError):
            decode_rows(data[:cut], p.width, flags, p.n)


def test_bad_length_rejected():
    with pytest.raises(ValueError):
        build_planes(np.zeros(64, dtype=np.uint64))
