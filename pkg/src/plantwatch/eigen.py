"""Symmetric eigendecomposition via cyclic Jacobi rotations.

Written directly on numpy arrays rather than delegated to LAPACK so the
routine can be validated against independent oracles (characteristic
polynomial roots, projector identities) in the tests.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionMismatch, EigenFailure


def jacobi_eigh(
    a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100
) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors of a real symmetric matrix.

    Sweeps over all off-diagonal pairs, zeroing one entry per rotation, until
    the off-diagonal Frobenius mass falls below ``tol`` times the matrix
    norm. Eigenvalues come back in descending order; eigenvectors are the
    matching columns, each flipped so its largest-magnitude component is
    positive.

    Raises:
        EigenFailure: no convergence within ``max_sweeps``, or non-finite
            values appear.
    """
    A = np.array(a, dtype=np.float64, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if not np.isfinite(A).all():
        raise EigenFailure("input matrix has non-finite entries")
    if not np.allclose(A, A.T, atol=1e-10, rtol=1e-10):
        raise EigenFailure("input matrix is not symmetric")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    if n == 1:
        return A[0, :1].copy(), V

    norm = float(np.linalg.norm(A))
    if norm == 0.0:
        return np.zeros(n), V
    stop = tol * norm
    converged = False
    # off-diagonal mass summed directly: the subtraction ||A||^2 - ||diag||^2
    # cancels catastrophically once off is tiny relative to the norm
    off_mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.square(A[off_mask]))))
        if off <= stop:
            converged = True
            break
        # rotations below this are numerically irrelevant for the sweep
        skip = off / (n * n) * 1e-3
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= skip:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # two-sided rotation J^T A J with J[p,p]=J[q,q]=c, J[p,q]=s, J[q,p]=-s
                cp = A[:, p].copy()
                cq = A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                A[p, q] = 0.0
                A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    if not converged:
        off = math.sqrt(float(np.sum(np.square(A[off_mask]))))
        if off > stop:
            raise EigenFailure(
                f"Jacobi did not converge in {max_sweeps} sweeps (off-norm {off:.3e})"
            )
    w = np.diag(A).copy()
    if not np.isfinite(w).all() or not np.isfinite(V).all():
        raise EigenFailure("Jacobi produced non-finite values")
    order = np.argsort(w)[::-1]
    w = w[order]
    V = V[:, order]
    # deterministic sign: largest-magnitude component of each vector positive
    for j in range(n):
        i = int(np.argmax(np.abs(V[:, j])))
        if V[i, j] < 0.0:
            V[:, j] = -V[:, j]
    return w, V
