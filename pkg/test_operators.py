"""Тесты операторов и их композиций."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import DimensionError, OperatorError
from operators import (IDENTITY, Affine, Composition, General, LinearMatrix, Power, add, apply, compose, diag,
                       identity, points_close, power, projection, rotation, scale, subtract, sup_distance, zero)

_small = st.integers(min_value=-4, max_value=4)
_entry = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)
_vector = st.lists(_entry, min_size=2, max_size=2)
_matrix = st.lists(_vector, min_size=2, max_size=2)


def test_linear_matrix_apply():
    B = LinearMatrix([[1, 2], [3, 4]])
    assert apply(B, (1, 1)) == (3.0, 7.0)
    assert B.is_linear


def test_linear_matrix_rejects_bad_shapes():
    with pytest.raises(OperatorError):
        LinearMatrix([[1, 2, 3], [4, 5, 6]])
    with pytest.raises(OperatorError):
        LinearMatrix([[1, math.nan], [0, 1]])
    with pytest.raises(DimensionError):
        diag(1, 2).apply((1, 2, 3))


def test_affine_linearity_depends_on_offset():
    assert Affine([[1, 0], [0, 1]], (0, 0)).is_linear
    shift = Affine([[1, 0], [0, 1]], (1, -1))
    assert not shift.is_linear
    assert shift.apply((0, 0)) == (1.0, -1.0)


def test_power_zero_is_identity():
    assert power(diag(2, 3), 0) is IDENTITY
    assert power(diag(2, 3), 1).label == "diag(2,3)"
    with pytest.raises(OperatorError):
        power(diag(2, 3), -1)


def test_power_of_diag():
    assert power(diag(1, 2), 3).apply((0, 1)) == (0.0, 8.0)


@given(a=_small, b=_small, c=_small, d=_small, n=st.integers(min_value=0, max_value=5))
def test_power_matches_matrix_power(a, b, c, d, n):
    B = LinearMatrix([[a, b], [c, d]])
    p = Power(B, n)
    expected = p.as_matrix() @ np.array([1.0, -2.0])
    assert np.allclose(p.apply((1, -2)), expected, rtol=1e-12, atol=1e-12)


def test_power_of_nonlinear_operator():
    square = General(lambda p: (p[0] * p[0],), "sq", dimension=1)
    assert power(square, 3).apply((2,)) == (256.0,)
    assert not power(square, 2).is_linear


def test_compose_applies_right_to_left():
    shift = Affine([[1, 0], [0, 1]], (1, 0))
    double = diag(2, 2)
    assert compose(double, shift).apply((0, 0)) == (2.0, 0.0)
    assert compose(shift, double).apply((0, 0)) == (1.0, 0.0)
    assert Composition([]).apply((3, 4)) == (3.0, 4.0)


def test_compose_rejects_mixed_dimensions():
    with pytest.raises(DimensionError):
        compose(diag(1, 2), diag(1, 2, 3))


def test_scale_requires_linear_and_positive():
    assert scale(diag(1, 2), 2).apply((1, 1)) == (2.0, 4.0)
    with pytest.raises(OperatorError):
        scale(diag(1, 2), 0)
    with pytest.raises(OperatorError):
        scale(Affine([[1, 0], [0, 1]], (1, 1)), 2)


def test_pointwise_sum_and_difference():
    B1, B2 = diag(1, 2), diag(3, 1)
    assert add(B1, B2).apply((1, 1)) == (4.0, 3.0)
    assert subtract(B1, B2).apply((1, 1)) == (-2.0, 1.0)


def test_zero_rotation_projection():
    assert zero(2).apply((5, -3)) == (0.0, 0.0)
    q = rotation(math.pi / 2).apply((1, 0))
    assert points_close(q, (0, 1), tol=1e-15)
    assert not points_close(q, (1, 0))
    assert projection(0).apply((3, 5)) == (3.0, 0.0)
    with pytest.raises(OperatorError):
        projection(2)


def test_sup_distance():
    assert sup_distance((0, 0), (1, -3)) == 3.0
    with pytest.raises(DimensionError):
        sup_distance((0, 0), (0, 0, 0))


def test_identity_is_dimension_agnostic():
    assert identity() is IDENTITY
    assert IDENTITY.apply((1, 2, 3)) == (1.0, 2.0, 3.0)
    assert IDENTITY.is_linear


@settings(max_examples=500)
@given(a=_matrix, b=_matrix, c=_matrix, p=_vector)
def test_composition_equals_nested_application(a, b, c, p):
    A, B, C = LinearMatrix(a), LinearMatrix(b), LinearMatrix(c)
    assert compose(A, B).apply(p) == A.apply(B.apply(p))
    assert Composition([A, B, C]).apply(p) == A.apply(B.apply(C.apply(p)))


@given(m=_matrix, p=_vector, q=_vector, a=_entry, b=_entry)
def test_linear_matrix_is_linear(m, p, q, a, b):
    """B(a p + b q) = a B(p) + b B(q) с относительной точностью 1e-12."""
    B = LinearMatrix(m)
    p, q = np.asarray(p), np.asarray(q)
    lhs = np.asarray(B.apply(a * p + b * q))
    rhs = a * np.asarray(B.apply(p)) + b * np.asarray(B.apply(q))
    bound = np.abs(np.asarray(m)) @ (abs(a) * np.abs(p) + abs(b) * np.abs(q))
    assert np.all(np.abs(lhs - rhs) <= 1e-12 * bound + 1e-300)
