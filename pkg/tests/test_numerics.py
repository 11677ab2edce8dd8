import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lagpert.errors import DimensionMismatch, SelfAdjointnessDefect, SingularMatrix
from lagpert.numerics import (certify_hermitian, hermitian_defect, hermitian_eig, jacobi_eigh, solve,
                              weighted_adjoint)

from conftest import random_hermitian


def test_certify_accepts_hermitian(rng):
    A = random_hermitian(rng, 6)
    cert = certify_hermitian(A)
    assert cert.defect == 0.0
    assert cert.shape == (6, 6)


def test_certify_rejects_skew_part(rng):
    A = random_hermitian(rng, 5)
    A[0, 1] += 1e-3
    with pytest.raises(SelfAdjointnessDefect):
        certify_hermitian(A)


def test_defect_is_relative():
    A = np.array([[1e6, 1.0], [1.0 + 1e-6, 0.0]])
    assert hermitian_defect(A) < 1e-11


@pytest.mark.parametrize("n", [1, 2, 7, 30])
def test_jacobi_matches_lapack(rng, n):
    A = random_hermitian(rng, n)
    w1, V1 = hermitian_eig(A)
    w2, V2 = hermitian_eig(A, method="jacobi")
    np.testing.assert_allclose(w1, w2, atol=1e-12 * max(1, np.abs(w1).max()))
    np.testing.assert_allclose(V2.conj().T @ V2, np.eye(n), atol=1e-12)
    np.testing.assert_allclose(A @ V2, V2 * w2, atol=1e-11)


def test_jacobi_diagonal_input_is_sorted():
    w, V = jacobi_eigh(np.diag([3.0, -1.0, 2.0]))
    np.testing.assert_array_equal(w, [-1.0, 2.0, 3.0])
    np.testing.assert_allclose(np.abs(V), np.eye(3)[:, [1, 2, 0]])


def test_unknown_method():
    with pytest.raises(ValueError):
        hermitian_eig(np.eye(2), method="qr")


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=2**31))
def test_eig_reconstructs(n, seed):
    A = random_hermitian(np.random.default_rng(seed), n)
    w, V = hermitian_eig(A)
    np.testing.assert_allclose((V * w) @ V.conj().T, A, atol=1e-12 * max(1, np.linalg.norm(A)))


def test_solve_vector_and_matrix(rng):
    A = rng.standard_normal((5, 5)) + 5 * np.eye(5)
    b = rng.standard_normal(5)
    np.testing.assert_allclose(A @ solve(A, b), b, atol=1e-12)
    B = rng.standard_normal((5, 3))
    np.testing.assert_allclose(A @ solve(A, B), B, atol=1e-12)


def test_solve_singular():
    with pytest.raises(SingularMatrix):
        solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))


def test_solve_shape_check():
    with pytest.raises(DimensionMismatch):
        solve(np.eye(3), np.ones(2))


def test_weighted_adjoint_identity(rng):
    # M : (C^4, weight 0.1) -> (C^3, weight 2)
    M = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    A = weighted_adjoint(M, 0.1, 2.0)
    x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    y = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    lhs = 2.0 * np.vdot(y, M @ x)
    rhs = 0.1 * np.vdot(A @ y, x)
    assert abs(lhs - rhs) < 1e-12


def test_weighted_adjoint_rejects_bad_weight():
    with pytest.raises(ValueError):
        weighted_adjoint(np.eye(2), 0.0, 1.0)
