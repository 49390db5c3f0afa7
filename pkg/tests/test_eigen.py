"""Jacobi eigendecomposition against independent oracles.

Two routes that share no code with the solver under test: characteristic
polynomial coefficients from the Faddeev-LeVerrier trace recursion with the
roots found by numpy's companion-matrix solver, and LAPACK's eigvalsh. Both
must agree with the Jacobi eigenvalues, and the eigenpairs must satisfy the
defining identities directly.
"""

from __future__ import annotations

import numpy as np
import pytest

from plantwatch.eigen import jacobi_eigh
from plantwatch.errors import DimensionMismatch, EigenFailure


def charpoly_coeffs(A: np.ndarray) -> np.ndarray:
    """det(xI - A) coefficients via the Faddeev-LeVerrier recursion."""
    n = A.shape[0]
    coeffs = [1.0]
    M = np.zeros_like(A)
    c = 1.0
    for k in range(1, n + 1):
        M = A @ (M + c * np.eye(n))
        c = -np.trace(M) / k
        coeffs.append(c)
    return np.array(coeffs)


def _random_symmetric(seed: int, n: int) -> np.ndarray:
    rng = np.random.default_rng((seed, 5))
    B = rng.normal(size=(n, n))
    return 0.5 * (B + B.T)


def test_eigenvalues_match_characteristic_polynomial_roots():
    for seed in range(15):
        n = 2 + seed % 5  # dimensions 2..6
        A = _random_symmetric(seed, n)
        w, _ = jacobi_eigh(A)
        roots = np.sort(np.roots(charpoly_coeffs(A)).real)[::-1]
        assert np.max(np.abs(w - roots)) < 1e-6, f"seed={seed}"


def test_eigenvalues_match_lapack():
    for seed in range(10):
        A = _random_symmetric(seed, 8)
        w, _ = jacobi_eigh(A)
        ref = np.sort(np.linalg.eigvalsh(A))[::-1]
        assert np.max(np.abs(w - ref)) < 1e-10


def test_eigenpairs_satisfy_defining_identities():
    A = _random_symmetric(123, 9)
    w, V = jacobi_eigh(A)
    assert np.max(np.abs(A @ V - V * w)) < 1e-10          # A v = lambda v
    assert np.max(np.abs(V.T @ V - np.eye(9))) < 1e-10    # orthonormal columns
    assert abs(w.sum() - np.trace(A)) < 1e-8              # trace identity
    assert np.all(np.diff(w) <= 1e-12)                    # descending order


def test_reconstruction_from_eigenpairs():
    A = _random_symmetric(7, 6)
    w, V = jacobi_eigh(A)
    assert np.max(np.abs((V * w) @ V.T - A)) < 1e-10


def test_sign_convention_is_deterministic():
    A = _random_symmetric(3, 5)
    _, V1 = jacobi_eigh(A)
    _, V2 = jacobi_eigh(A.copy())
    assert np.array_equal(V1, V2)
    for j in range(5):
        i = int(np.argmax(np.abs(V1[:, j])))
        assert V1[i, j] > 0.0


def test_diagonal_and_identity_are_trivial():
    d = np.array([3.0, -1.0, 2.0])
    w, V = jacobi_eigh(np.diag(d))
    assert np.allclose(w, [3.0, 2.0, -1.0], atol=0)
    assert np.allclose(np.abs(V), np.eye(3)[:, [0, 2, 1]], atol=0)
    w, V = jacobi_eigh(np.eye(4))
    assert np.array_equal(w, np.ones(4))
    # tie order among equal eigenvalues is unspecified; columns must still
    # be exact standard basis vectors
    assert np.array_equal(np.abs(V) @ np.abs(V).T, np.eye(4))
    assert np.array_equal(np.abs(V).sum(), 4.0)
    w, V = jacobi_eigh(np.zeros((2, 2)))
    assert np.array_equal(w, np.zeros(2))


def test_one_by_one_matrix():
    w, V = jacobi_eigh(np.array([[4.5]]))
    assert np.array_equal(w, [4.5])
    assert np.array_equal(V, np.eye(1))


def test_perfectly_correlated_pair_yields_two_and_zero():
    corr = np.array([[1.0, 1.0], [1.0, 1.0]])
    w, V = jacobi_eigh(corr)
    assert w == pytest.approx([2.0, 0.0], abs=1e-12)
    assert np.allclose(np.abs(V[:, 0]), 1.0 / np.sqrt(2.0), atol=1e-12)


def test_large_correlation_matrix_converges():
    # near-degenerate correlation structure with heavy off-diagonal mass
    rng = np.random.default_rng(11)
    X = rng.normal(size=(400, 60))
    X[:, 1] = X[:, 0] + 1e-6 * rng.normal(size=400)  # almost duplicated column
    Xs = (X - X.mean(axis=0)) / X.std(axis=0)
    corr = (Xs.T @ Xs) / X.shape[0]
    w, V = jacobi_eigh(corr)
    assert abs(w.sum() - 60.0) < 1e-8
    assert np.max(np.abs(corr @ V - V * w)) < 1e-9
    assert np.all(w > -1e-10)  # correlation matrices are PSD


def test_failure_paths():
    with pytest.raises(DimensionMismatch):
        jacobi_eigh(np.zeros((2, 3)))
    with pytest.raises(EigenFailure):
        jacobi_eigh(np.array([[0.0, 1.0], [2.0, 0.0]]))  # not symmetric
    with pytest.raises(EigenFailure):
        jacobi_eigh(np.array([[np.nan, 0.0], [0.0, 1.0]]))
    with pytest.raises(EigenFailure):
        jacobi_eigh(_random_symmetric(0, 5), max_sweeps=0)
