import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from refdiff import (
    AttentionStack,
    average_heads,
    correlation_matrix,
    normalize_minmax,
    resize_bilinear,
    select_token_map,
)
from refdiff.errors import IndexOutOfRange

from oracles import naive_normalize, naive_resize_bilinear

RNG = np.random.default_rng(1234)


def test_average_single_head_is_identity():
    data = RNG.random((3, 4, 2, 1))
    stack = AttentionStack(data)
    assert np.array_equal(average_heads(stack), data[:, :, :, 0])


def test_average_two_heads():
    data = np.zeros((1, 1, 1, 2))
    data[0, 0, 0] = [1.0, 3.0]
    assert average_heads(AttentionStack(data))[0, 0, 0] == 2.0


def test_average_shape_contract():
    stack = AttentionStack(RNG.random((5, 3, 4, 7)))
    assert average_heads(stack).shape == (5, 3, 4)


def test_select_only_slice():
    avg = RNG.random((4, 4, 1))
    assert np.array_equal(select_token_map(avg, 0), avg[:, :, 0])


def test_select_out_of_range():
    avg = RNG.random((4, 4, 3))
    with pytest.raises(IndexOutOfRange):
        select_token_map(avg, 3)
    with pytest.raises(IndexOutOfRange):
        select_token_map(avg, -1)


def test_select_distinct_slices():
    avg = RNG.random((4, 4, 3))
    maps = [select_token_map(avg, k) for k in range(3)]
    assert not np.array_equal(maps[0], maps[1])
    assert not np.array_equal(maps[1], maps[2])


def test_normalize_constant_map_is_zero():
    out = normalize_minmax(np.full((3, 3), 2.0), 1e-8)
    assert np.array_equal(out, np.zeros((3, 3)))


def test_normalize_known_values():
    out = normalize_minmax(np.array([[1.0, 3.0], [5.0, 7.0]]), 1e-8)
    expected = np.array([[0.0, 1 / 3], [2 / 3, 1.0]])
    assert np.max(np.abs(out - expected)) <= 1e-6


def test_normalize_strict_upper_bound():
    m = RNG.random((6, 6)) * 10
    out = normalize_minmax(m, 1e-8)
    rng_span = m.max() - m.min()
    assert out.max() <= rng_span / (rng_span + 1e-8)
    assert out.max() < 1.0
    assert out.min() == 0.0


def test_resize_identity():
    m = RNG.random((5, 7))
    assert np.max(np.abs(resize_bilinear(m, 5, 7) - m)) <= 1e-6


def test_resize_constant_extension():
    out = resize_bilinear(np.array([[3.5]]), 4, 6)
    assert out.shape == (4, 6)
    assert np.all(out == 3.5)


def test_resize_checkerboard_against_oracle():
    m = np.array([[0.0, 1.0], [1.0, 0.0]])
    out = resize_bilinear(m, 4, 4)
    expected = naive_resize_bilinear(m, 4, 4)
    assert np.max(np.abs(out - expected)) <= 1e-6
    centre = out[1:3, 1:3]
    assert abs(centre.mean() - 0.5) <= 1e-6


def test_correlation_composition_collapses():
    data = RNG.random((6, 6, 1, 1))
    stack = AttentionStack(data)
    c = correlation_matrix(stack, 0, 6, 6, 1e-8)
    expected = normalize_minmax(data[:, :, 0, 0], 1e-8)
    assert np.max(np.abs(c.data - expected)) <= 1e-6
    assert c.source_token == 0


def test_correlation_hot_quadrant_localizes():
    data = np.full((8, 8, 2, 3), 0.01)
    data[0:4, 0:4, 1, :] = 1.0  # hot upper-left quadrant for token 1
    c = correlation_matrix(AttentionStack(data), 1, 32, 32, 1e-8)
    x, y = np.unravel_index(np.argmax(c.data), c.data.shape)
    assert x < 16 and y < 16


def test_correlation_range():
    for _ in range(10):
        stack = AttentionStack(RNG.random((5, 4, 3, 2)))
        c = correlation_matrix(stack, 1, 17, 13, 1e-8)
        assert c.data.min() >= 0.0
        assert c.data.max() <= 1.0


small_maps = arrays(
    np.float64,
    st.tuples(st.integers(1, 8), st.integers(1, 8)),
    elements=st.floats(-100, 100, allow_nan=False),
)


@settings(max_examples=60, deadline=None)
@given(small_maps, st.floats(0.1, 10), st.floats(-5, 5))
def test_normalize_affine_invariance(m, a, b):
    base = normalize_minmax(m, 1e-8)
    scaled = normalize_minmax(a * m + b, 1e-8)
    assert np.max(np.abs(base - scaled)) <= 1e-6


@settings(max_examples=60, deadline=None)
@given(small_maps, st.integers(1, 12), st.integers(1, 12))
def test_resize_preserves_bounds(m, W, H):
    out = resize_bilinear(m, W, H)
    assert out.min() >= m.min() - 1e-9
    assert out.max() <= m.max() + 1e-9


@settings(max_examples=40, deadline=None)
@given(small_maps, small_maps, st.integers(1, 10), st.integers(1, 10))
def test_resize_is_linear(m1, m2, W, H):
    if m1.shape != m2.shape:
        m2 = np.resize(m2, m1.shape)
    combined = resize_bilinear(m1 + 2.0 * m2, W, H)
    separate = resize_bilinear(m1, W, H) + 2.0 * resize_bilinear(m2, W, H)
    assert np.max(np.abs(combined - separate)) <= 1e-9 * (1 + np.abs(separate).max())


def test_argmax_invariant_under_positive_scaling():
    for _ in range(20):
        data = RNG.random((6, 5, 2, 2))
        c1 = correlation_matrix(AttentionStack(data), 0, 20, 18, 1e-8)
        c2 = correlation_matrix(AttentionStack(data * 37.5), 0, 20, 18, 1e-8)
        assert np.argmax(c1.data) == np.argmax(c2.data)
