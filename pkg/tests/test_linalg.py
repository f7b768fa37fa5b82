import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from crerk.errors import ExpmOverflowError, InvalidInputError, UnsupportedOrderError
from crerk.linalg import krylov_apply, mat_exp, phi_functions, phi_mat
from crerk.problems import henon_heiles, sine_gordon

from oracles import phi_quadrature, taylor_expm


def random_matrix(rng, n, norm):
    A = rng.standard_normal((n, n))
    return A * (norm / np.linalg.norm(A, 2))


def skew(rng, n, norm):
    B = rng.standard_normal((n, n))
    S = B - B.T
    return S * (norm / np.linalg.norm(S, 2))


# --- mat_exp -------------------------------------------------------------------

def test_exp_of_zero_is_identity():
    np.testing.assert_array_equal(mat_exp(np.zeros((3, 3))), np.eye(3))


def test_exp_of_diagonal():
    E = mat_exp(np.diag([1.0, -2.0]))
    np.testing.assert_allclose(E, np.diag([math.e, math.exp(-2.0)]), rtol=1e-15, atol=0)


def test_rotation_matches_taylor_oracle():
    theta = 0.7
    A = np.array([[0.0, -theta], [theta, 0.0]])
    E = mat_exp(A)
    np.testing.assert_allclose(E, taylor_expm(A), atol=1e-15)
    np.testing.assert_allclose(E, [[math.cos(theta), -math.sin(theta)],
                                   [math.sin(theta), math.cos(theta)]], atol=1e-15)


@pytest.mark.parametrize("norm", [1e-3, 0.1, 1.0, 3.0, 8.0])
def test_taylor_oracle_on_random_matrices(norm):
    rng = np.random.default_rng(int(norm * 1000))
    A = random_matrix(rng, 6, norm)
    ref = taylor_expm(A)
    assert np.linalg.norm(mat_exp(A) - ref) <= 1e-13 * np.linalg.norm(ref)


@pytest.mark.parametrize("norm", [0.5, 5.0, 20.0, 50.0])
def test_matches_scipy(norm):
    rng = np.random.default_rng(7)
    A = random_matrix(rng, 10, norm) / 4.0 + skew(rng, 10, norm)
    ref = scipy.linalg.expm(A)
    assert np.linalg.norm(mat_exp(A) - ref) <= 1e-12 * np.linalg.norm(ref)


@pytest.mark.parametrize("norm", [1.0, 10.0, 50.0])
def test_inverse_pair_for_skew_arguments(norm):
    rng = np.random.default_rng(3)
    A = skew(rng, 8, norm)
    assert np.linalg.norm(mat_exp(A) @ mat_exp(-A) - np.eye(8)) <= 1e-12


def test_inverse_pair_for_scaled_problem_operator():
    M = henon_heiles().M
    A = -50.0 * M / np.linalg.norm(M, 2)
    assert np.linalg.norm(mat_exp(A) @ mat_exp(-A) - np.eye(4)) <= 1e-12


def test_commuting_sum():
    A = np.diag([0.3, -1.2, 2.0])
    B = np.diag([1.1, 0.4, -0.7])
    np.testing.assert_allclose(mat_exp(A + B), mat_exp(A) @ mat_exp(B), atol=1e-12, rtol=0)
    rng = np.random.default_rng(0)
    C = random_matrix(rng, 5, 2.0)
    np.testing.assert_allclose(mat_exp(3.0 * C), mat_exp(C) @ mat_exp(2.0 * C),
                               rtol=1e-12, atol=1e-12 * np.abs(mat_exp(3.0 * C)).max())


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.floats(min_value=0.01, max_value=50.0))
def test_skew_exponential_preserves_norm(seed, norm):
    rng = np.random.default_rng(seed)
    A = skew(rng, 6, norm)
    x = rng.standard_normal(6)
    assert abs(np.linalg.norm(mat_exp(A) @ x) - np.linalg.norm(x)) <= 1e-12 * np.linalg.norm(x)


def test_non_finite_input_rejected():
    with pytest.raises(InvalidInputError):
        mat_exp(np.array([[np.nan, 0.0], [0.0, 1.0]]))
    with pytest.raises(InvalidInputError):
        mat_exp(np.ones((2, 3)))


def test_overflow_is_reported():
    with pytest.raises(ExpmOverflowError):
        mat_exp(np.diag([1000.0, 0.0]))


# --- phi functions ------------------------------------------------------------------

def test_phi_at_zero():
    for k in (1, 2):
        np.testing.assert_array_equal(phi_mat(k, np.zeros((4, 4))), np.eye(4) / math.factorial(k))


def test_phi1_scalar_one():
    val = phi_mat(1, np.array([[1.0]]))[0, 0]
    assert abs(val - (math.e - 1.0)) <= 1e-15
    assert abs(val - phi_quadrature(1, np.array([[1.0]]))[0, 0]) <= 1e-13


def test_phi2_scalar_minus_two():
    val = phi_mat(2, np.array([[-2.0]]))[0, 0]
    closed = (math.exp(-2.0) - 1.0 + 2.0) / 4.0
    assert abs(val - closed) <= 1e-15
    assert abs(val - 0.283833821) <= 1e-9


def test_unsupported_phi_index():
    with pytest.raises(UnsupportedOrderError):
        phi_mat(3, np.eye(2))
    with pytest.raises(UnsupportedOrderError):
        phi_mat(0, np.eye(2))


@pytest.mark.parametrize("seed", range(10))
def test_phi_recurrence(seed):
    rng = np.random.default_rng(100 + seed)
    A = random_matrix(rng, 8, rng.uniform(0.1, 10.0))
    E, p1, p2 = phi_functions(A)
    scale = max(1.0, np.abs(p1).max())
    assert np.abs(A @ p2 - (p1 - np.eye(8))).max() <= 1e-12 * scale
    assert np.abs(A @ p1 - (E - np.eye(8))).max() <= 1e-12 * max(1.0, np.abs(E).max())


@pytest.mark.parametrize("seed", range(10))
def test_phi_matches_quadrature(seed):
    rng = np.random.default_rng(200 + seed)
    A = random_matrix(rng, 8, rng.uniform(0.1, 10.0))
    for k in (1, 2):
        ref = phi_quadrature(k, A)
        assert np.abs(phi_mat(k, A) - ref).max() <= 1e-10 * max(1.0, np.abs(ref).max())


def test_phi_small_argument_has_no_cancellation():
    A = np.array([[1e-9]])
    _, p1, p2 = phi_functions(A)
    assert abs(p1[0, 0] - (1.0 + 0.5e-9)) <= 1e-16
    assert abs(p2[0, 0] - (0.5 + 1e-9 / 6.0)) <= 1e-16


# --- Krylov ----------------------------------------------------------------------------

def test_krylov_zero_vector():
    A = -sine_gordon(48).M / 16.0
    y, info = krylov_apply(A, np.zeros(96), full_output=True)
    np.testing.assert_array_equal(y, np.zeros(96))
    assert info.converged


def test_krylov_diagonal():
    a = np.linspace(-3.0, 1.0, 80)
    v = np.linspace(1.0, 2.0, 80)
    y = krylov_apply(np.diag(a), v, subspace_dim=80, tol=1e-13)
    np.testing.assert_allclose(y, np.exp(a) * v, rtol=1e-12)


def test_krylov_dense_fallback_below_threshold():
    A = -henon_heiles().M
    v = np.arange(1.0, 5.0)
    y, info = krylov_apply(A, v, full_output=True)
    assert info.dense
    np.testing.assert_allclose(y, mat_exp(A) @ v, rtol=0, atol=1e-15)


@pytest.mark.parametrize("kind", ["exp", "phi1"])
def test_krylov_full_subspace_reproduces_dense(kind):
    rng = np.random.default_rng(5)
    A = -sine_gordon(48).M / 16.0
    v = rng.standard_normal(96)
    v /= np.linalg.norm(v)
    y = krylov_apply(A, v, kind=kind, subspace_dim=96, dense_threshold=0)
    ref = (mat_exp(A) if kind == "exp" else phi_mat(1, A)) @ v
    assert np.linalg.norm(y - ref) <= 1e-12


@pytest.mark.parametrize("kind", ["exp", "phi1"])
def test_krylov_laplacian_block(kind):
    prob = sine_gordon(48)
    rng = np.random.default_rng(11)
    A = -prob.params["L"] / 256.0
    v = rng.standard_normal(48)
    v /= np.linalg.norm(v)
    y, info = krylov_apply(A, v, kind=kind, subspace_dim=48, tol=1e-10, dense_threshold=0,
                           full_output=True)
    ref = (mat_exp(A) if kind == "exp" else phi_mat(1, A)) @ v
    assert not info.dense and info.converged
    assert np.linalg.norm(y - ref) <= 1e-10


def test_krylov_lucky_breakdown():
    # v is an eigenvector, so the Krylov space is one-dimensional
    A = np.diag(np.arange(1.0, 71.0)) / 70.0
    v = np.zeros(70)
    v[3] = 2.0
    y, info = krylov_apply(A, v, full_output=True)
    assert info.breakdown and info.converged and info.subspace_dim == 1
    np.testing.assert_allclose(y, np.exp(A[3, 3]) * v, rtol=1e-15)


def test_krylov_argument_errors():
    A = np.eye(80)
    v = np.ones(80)
    with pytest.raises(InvalidInputError):
        krylov_apply(A, v, kind="phi2")
    with pytest.raises(InvalidInputError):
        krylov_apply(A, v, subspace_dim=81)
    with pytest.raises(InvalidInputError):
        krylov_apply(A, v, tol=0.0)
    with pytest.raises(InvalidInputError):
        krylov_apply(A, np.ones(79))
