"""Polynomial-matrix and shift-operator basics."""

import numpy as np
import pytest

from diagfilter.shiftpoly import PolyMatrix, pole_polynomial, shift_matrix


def test_shift_matrix_advances_columns():
    horizon = 6
    d = shift_matrix(horizon)
    rng = np.random.default_rng(0)
    e = rng.normal(size=(3, horizon))
    shifted = e @ d
    assert np.array_equal(shifted[:, :-1], e[:, 1:])
    assert np.all(shifted[:, -1] == 0.0)


def test_shift_matrix_is_nilpotent():
    horizon = 5
    d = shift_matrix(horizon)
    assert np.any(np.linalg.matrix_power(d, horizon - 1) != 0)
    assert np.all(np.linalg.matrix_power(d, horizon) == 0)


def test_pole_polynomial_halved_pole_values():
    # (q - 1/2)^3 / (1/2)^3 = 8q^3 - 12q^2 + 6q - 1, ascending order
    coeffs = pole_polynomial(0.5, 3)
    assert np.array_equal(coeffs, np.array([-1.0, 6.0, -12.0, 8.0]))


def test_pole_polynomial_zero_pole_is_pure_delay():
    for degree in (1, 2, 3, 5):
        coeffs = pole_polynomial(0.0, degree)
        expected = np.zeros(degree + 1)
        expected[-1] = 1.0
        assert np.array_equal(coeffs, expected)


def test_pole_polynomial_normalised_at_one():
    rng = np.random.default_rng(7)
    for _ in range(50):
        pole = rng.uniform(-0.9, 0.9)
        degree = int(rng.integers(1, 6))
        coeffs = pole_polynomial(pole, degree)
        assert abs(np.sum(coeffs) - 1.0) < 1e-12
        # evaluating at the pole gives zero
        powers = pole ** np.arange(degree + 1)
        assert abs(coeffs @ powers) < 1e-12


def test_pole_polynomial_rejects_unit_pole():
    with pytest.raises(ValueError):
        pole_polynomial(1.0, 3)


def test_polymatrix_evaluation():
    m0 = np.array([[1.0, 0.0], [0.0, 2.0]])
    m1 = np.array([[0.0, 1.0], [1.0, 0.0]])
    pm = PolyMatrix([m0, m1])
    assert pm.degree == 1
    assert pm.shape == (2, 2)
    q0 = 3.0
    assert np.allclose(pm(q0), m0 + q0 * m1)
    assert np.allclose(pm.eval_at_one(), m0 + m1)


def test_polymatrix_rejects_mixed_shapes():
    with pytest.raises(ValueError):
        PolyMatrix([np.zeros((2, 2)), np.zeros((3, 2))])
