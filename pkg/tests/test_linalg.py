import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from roughman.errors import DimMismatch, RankDeficient
from roughman.linalg import apply_bilinear, is_symmetric, pinv_apply, sym

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def square(d):
    return arrays(np.float64, (d, d), elements=finite)


@pytest.mark.parametrize("t, expected", [
    ([[0, 1], [0, 0]], [[0, 0.5], [0.5, 0]]),
    ([[2, 0], [0, 3]], [[2, 0], [0, 3]]),
    ([[1, 4], [2, 1]], [[1, 3], [3, 1]]),
])
def test_sym_examples(t, expected):
    np.testing.assert_array_equal(sym(t), expected)


@given(square(3))
def test_sym_idempotent_and_quadratic_form(t):
    s = sym(t)
    np.testing.assert_array_equal(sym(s), s)
    assert is_symmetric(s, tol=0.0)
    v = np.array([0.3, -1.2, 2.0])
    assert np.isclose(v @ s @ v, v @ t @ v, rtol=1e-12, atol=1e-9)


@given(square(2), square(2), finite, finite)
def test_sym_linear(s, t, a, b):
    np.testing.assert_allclose(sym(a * s + b * t), a * sym(s) + b * sym(t), rtol=1e-9, atol=1e-6)


def test_sym_rejects_non_square():
    with pytest.raises(DimMismatch):
        sym(np.zeros((2, 3)))


def test_pinv_examples():
    np.testing.assert_allclose(pinv_apply(np.eye(2), [3.0, 4.0]), [3.0, 4.0])
    np.testing.assert_allclose(pinv_apply([[1.0], [0.0]], [5.0, 7.0]), [5.0])
    np.testing.assert_allclose(pinv_apply([[1.0], [1.0]], [1.0, 3.0]), [2.0])


def test_pinv_rank_deficient():
    with pytest.raises(RankDeficient):
        pinv_apply([[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]], [1.0, 0.0, 0.0])
    with pytest.raises(RankDeficient):
        pinv_apply(np.zeros((3, 1)), np.ones(3))


@settings(max_examples=50)
@given(arrays(np.float64, (5, 3), elements=st.floats(-2, 2)), arrays(np.float64, 3, elements=finite))
def test_pinv_round_trip(a, c):
    a = a + 3 * np.eye(5, 3)  # keep full column rank
    np.testing.assert_allclose(pinv_apply(a, a @ c), c, rtol=1e-8, atol=1e-8)


def test_apply_bilinear_examples():
    assert np.all(apply_bilinear(np.zeros((4, 9)), np.ones((3, 3))) == 0)
    np.testing.assert_array_equal(apply_bilinear([[1.0]], [[2.5]]), [2.5])
    rng = np.random.default_rng(3)
    m = rng.normal(size=(4, 9))
    e12 = np.zeros((3, 3))
    e12[0, 1] = 1.0
    # e_1 (x) e_2 picks column 0*3 + 1
    np.testing.assert_array_equal(apply_bilinear(m, e12), m[:, 1])


@given(square(2), square(2), finite, finite)
def test_apply_bilinear_linear(s, t, a, b):
    m = np.arange(12.0).reshape(3, 4) - 5
    lhs = apply_bilinear(m, a * s + b * t)
    rhs = a * apply_bilinear(m, s) + b * apply_bilinear(m, t)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-3)


def test_apply_bilinear_dim_mismatch():
    with pytest.raises(DimMismatch):
        apply_bilinear(np.zeros((2, 4)), np.zeros((3, 3)))
