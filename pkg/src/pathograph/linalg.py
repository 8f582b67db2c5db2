"""Dense linear-algebra kernels: thin SVD, symmetric eigenpairs, rank-1 residual.

The SVD is a one-sided Jacobi in double precision (rotation sweeps JIT-compiled
with numba).  Singular-vector sign is fixed so the max-absolute entry of each
left vector is positive, which keeps downstream feature scores deterministic.
"""

from dataclasses import dataclass

import numba
import numpy as np

from .errors import InvalidInput, NumericalFailure

_MAX_SWEEPS = 100


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``m = left @ diag(singular_values) @ right.T``."""

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray

    def reconstruct(self):
        return (self.left * self.singular_values) @ self.right.T


def _check_matrix(m):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise InvalidInput(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput("matrix contains non-finite entries")
    return m


def _complete_basis(u, r):
    """Extend the first ``r`` orthonormal columns of ``u`` to a full set.

    Deterministic Gram-Schmidt against identity candidates; keeps the
    existing columns untouched and never materializes an n x n matrix.
    """
    n, k = u.shape
    if r == k:
        return u
    out = u.copy()
    filled = r
    for j in range(n):
        if filled == k:
            break
        w = np.zeros(n)
        w[j] = 1.0
        for _ in range(2):  # re-orthogonalize for numerical safety
            w -= out[:, :filled] @ (out[:, :filled].T @ w)
        norm = np.linalg.norm(w)
        if norm > 1e-8:
            out[:, filled] = w / norm
            filled += 1
    if filled < k:
        raise NumericalFailure("could not complete an orthonormal basis")
    return out


@numba.njit(cache=True)
def _jacobi_sweeps(work, v, tol, eps, max_sweeps):  # pragma: no cover - jitted
    rows, cols = work.shape
    for _ in range(max_sweeps):
        off_sq = 0.0
        rotated = False
        for p in range(cols - 1):
            for q in range(p + 1, cols):
                apq = 0.0
                app = 0.0
                aqq = 0.0
                for r in range(rows):
                    apq += work[r, p] * work[r, q]
                    app += work[r, p] * work[r, p]
                    aqq += work[r, q] * work[r, q]
                off_sq += 2.0 * apq * apq
                if abs(apq) <= eps * np.sqrt(app * aqq):
                    continue
                rotated = True
                theta = 0.5 * np.arctan2(2.0 * apq, app - aqq)
                c = np.cos(theta)
                s = np.sin(theta)
                for r in range(rows):
                    wp = work[r, p]
                    work[r, p] = c * wp + s * work[r, q]
                    work[r, q] = -s * wp + c * work[r, q]
                for r in range(cols):
                    vp = v[r, p]
                    v[r, p] = c * vp + s * v[r, q]
                    v[r, q] = -s * vp + c * v[r, q]
        if np.sqrt(off_sq) < tol or not rotated:
            return True
    return False


def _jacobi_svd(a):
    """One-sided Jacobi on ``a`` with rows >= cols. Returns (u, sigma, v)."""
    rows, cols = a.shape
    work = np.ascontiguousarray(a, dtype=np.float64).copy()
    v = np.eye(cols)
    frob = np.linalg.norm(a)
    if frob == 0.0:
        return _complete_basis(np.zeros((rows, cols)), 0), np.zeros(cols), v
    eps = float(np.finfo(np.float64).eps)
    if not _jacobi_sweeps(work, v, 1e-12 * frob, eps, _MAX_SWEEPS):
        raise NumericalFailure(f"SVD did not converge within {_MAX_SWEEPS} sweeps")

    sigma = np.linalg.norm(work, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    work = work[:, order]
    v = v[:, order]

    u = np.zeros_like(work)
    cutoff = eps * max(rows, cols) * (sigma[0] if sigma[0] > 0 else 1.0)
    rank = int(np.sum(sigma > cutoff))
    sigma[rank:] = 0.0
    for i in range(rank):
        u[:, i] = work[:, i] / sigma[i]
    u = _complete_basis(u, rank)
    return u, sigma, v


def svd(m):
    """Thin SVD with deterministic sign convention on the left vectors."""
    m = _check_matrix(m)
    rows, cols = m.shape
    if rows >= cols:
        u, sigma, v = _jacobi_svd(m)
    else:
        v, sigma, u = _jacobi_svd(m.T)

    # Max-abs entry of each left singular vector made positive.
    for j in range(u.shape[1]):
        idx = int(np.argmax(np.abs(u[:, j])))
        if u[idx, j] < 0:
            u[:, j] = -u[:, j]
            v[:, j] = -v[:, j]
    return SvdResult(left=u, singular_values=sigma, right=v)


def first_left_vector(m):
    """First left singular vector of ``m`` under the sign convention."""
    return svd(m).left[:, 0].copy()


def symmetric_eigen(m, k):
    """The ``k`` smallest eigenpairs of a symmetric matrix."""
    m = _check_matrix(m)
    n = m.shape[0]
    if m.shape[1] != n or not np.allclose(m, m.T, atol=1e-9):
        raise InvalidInput("matrix is not symmetric within 1e-9")
    if not 1 <= k <= n:
        raise InvalidInput(f"k={k} out of range for {n}x{n} matrix")
    vals, vecs = np.linalg.eigh((m + m.T) / 2.0)
    return vals[:k].copy(), vecs[:, :k].copy()


def rank_one_residual(m, s):
    """Frobenius distance from ``m`` to its best rank-1 approximation."""
    m = _check_matrix(m)
    approx = s.singular_values[0] * np.outer(s.left[:, 0], s.right[:, 0])
    return float(np.linalg.norm(m - approx))
