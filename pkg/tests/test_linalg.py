import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cstrid.linalg import (
    det4,
    det_adj5,
    det_laplace,
    jacobi_eigenvalues,
    lambda_min,
    pack_sym,
    packed_size,
    unpack_sym,
)

entries = st.floats(-10, 10, allow_nan=False)


def test_pack_roundtrip():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(5, 5))
    A = A + A.T
    p = np.empty(packed_size(5))
    pack_sym(A, p)
    assert p.size == 15
    np.testing.assert_array_equal(unpack_sym(p, 5), A)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (4, 4), elements=entries))
def test_det4_matches_laplace(A):
    assert det4(A) == pytest.approx(det_laplace(A), rel=1e-9, abs=1e-9)


def test_det_laplace_small_cases():
    assert det_laplace(np.zeros((0, 0))) == 1.0
    assert det_laplace([[3.0]]) == 3.0
    assert det_laplace([[1, 2], [3, 4]]) == -2.0


def test_adjugate_identity_on_random_matrices():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        A = rng.uniform(-1, 1, (5, 5))
        d, adj = det_adj5(A)
        np.testing.assert_allclose(adj @ A, d * np.eye(5), atol=1e-10)
        np.testing.assert_allclose(A @ adj, d * np.eye(5), atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (5, 5), elements=entries))
def test_det5_matches_laplace(A):
    d, _ = det_adj5(A)
    assert d == pytest.approx(det_laplace(A), rel=1e-9, abs=1e-6)


def test_adjugate_of_singular_matrices():
    d, adj = det_adj5(np.zeros((5, 5)))
    assert d == 0 and np.all(adj == 0)
    # rank 4: adjugate is nonzero although the inverse does not exist
    A = np.diag([1.0, 2.0, 3.0, 4.0, 0.0])
    d, adj = det_adj5(A)
    assert d == 0
    assert adj[4, 4] == 24.0
    d, adj = det_adj5(np.eye(5))
    assert d == 1.0
    np.testing.assert_array_equal(adj, np.eye(5))


def test_jacobi_against_lapack():
    rng = np.random.default_rng(2)
    for _ in range(200):
        B = rng.normal(size=(5, 5))
        S = B @ B.T
        np.testing.assert_allclose(jacobi_eigenvalues(S), np.linalg.eigvalsh(S),
                                   atol=1e-10 * np.linalg.norm(S))


def test_lambda_min_simple_cases():
    assert lambda_min(np.zeros((5, 5))) == 0.0
    assert lambda_min(3 * np.eye(5)) == 3.0
    assert lambda_min(np.diag([4.0, 1.0, 2.0, 5.0, 3.0])) == 1.0
    e1 = np.zeros(5)
    e1[0] = 1.0
    assert lambda_min(np.outer(e1, e1)) == 0.0


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (5, 5), elements=entries))
def test_jacobi_sum_and_order(B):
    S = B + B.T
    w = jacobi_eigenvalues(S)
    assert np.all(np.diff(w) >= 0)
    assert w.sum() == pytest.approx(np.trace(S), abs=1e-9 * (1 + np.abs(S).sum()))
