"""Small dense linear algebra for control certificates.

Everything here operates on matrices no larger than 8x8 (the plant and
error models are 2-5 dimensional), so all solvers are direct: the Lyapunov
equation is solved through its Kronecker-product linear system and the
symmetric eigenproblem through cyclic Jacobi sweeps.
"""

from __future__ import annotations

import numpy as np

MAX_DIM = 8

SYMMETRY_RTOL = 1e-12


class NotHurwitzError(ValueError):
    """Matrix has an eigenvalue with nonnegative real part."""


class SingularSystemError(ValueError):
    """Direct linear solve hit a (numerically) singular system."""


class NotSymmetricError(ValueError):
    """Matrix is not symmetric within tolerance."""


class NotPositiveDefiniteError(ValueError):
    """Symmetric matrix has a nonpositive eigenvalue."""


def _as_square(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    if M.shape[0] < 1 or M.shape[0] > MAX_DIM:
        raise ValueError(f"{name} dimension {M.shape[0]} outside 1..{MAX_DIM}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def _check_symmetric(M, name="matrix"):
    scale = np.max(np.abs(M))
    if scale == 0.0:
        return
    if np.max(np.abs(M - M.T)) > SYMMETRY_RTOL * scale:
        raise NotSymmetricError(f"{name} is not symmetric within {SYMMETRY_RTOL} relative tolerance")


class SpdMatrix:
    """Symmetric positive-definite matrix with cached extreme eigenvalues.

    Houses the quadratic form V(e) = e' P e used throughout the certificate
    computations. Construction validates symmetry (1e-12 relative) and
    positive definiteness.
    """

    def __init__(self, mat):
        mat = _as_square(mat, "SpdMatrix")
        _check_symmetric(mat, "SpdMatrix")
        mat = 0.5 * (mat + mat.T)
        w, _ = sym_eigen(mat)
        if w[0] <= 0.0:
            raise NotPositiveDefiniteError(f"smallest eigenvalue {w[0]:.3e} is not positive")
        self.mat = mat
        self.lam_min = float(w[0])
        self.lam_max = float(w[-1])

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    def cond(self) -> float:
        """Spectral condition number lambda_max / lambda_min."""
        return self.lam_max / self.lam_min

    def quad(self, e) -> float:
        """Quadratic form e' P e."""
        e = np.asarray(e, dtype=float)
        return float(e @ self.mat @ e)

    def __repr__(self):
        return f"SpdMatrix({self.mat!r})"


def sym_eigen(S):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Returns (eigenvalues ascending, orthonormal eigenvectors as columns).
    Raises NotSymmetricError when S is not symmetric within 1e-12 relative
    tolerance.
    """
    S = _as_square(S, "S")
    _check_symmetric(S, "S")
    n = S.shape[0]
    A = 0.5 * (S + S.T)
    V = np.eye(n)
    scale = np.sqrt(np.sum(A * A))
    if scale == 0.0:
        return np.zeros(n), V
    tol = 1e-15 * scale
    for _ in range(60):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2) * 2.0)
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-18 * scale:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # two-sided rotation in the (p, q) plane
                col_p, col_q = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p, row_q = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def solve_lyapunov(A, R):
    """Solve A' P + P A = -R for P, with A Hurwitz and R SPD.

    Uses the vectorized Kronecker linear system; the returned P satisfies
    the residual bound ||A'P + PA + R||_inf <= 1e-9 ||R||_inf and is
    returned as an SpdMatrix.
    """
    A = _as_square(A, "A")
    R_mat = R.mat if isinstance(R, SpdMatrix) else SpdMatrix(R).mat
    n = A.shape[0]
    if R_mat.shape[0] != n:
        raise ValueError(f"dimension mismatch: A is {n}x{n}, R is {R_mat.shape[0]}x{R_mat.shape[0]}")
    eigs = np.linalg.eigvals(A)
    if np.max(eigs.real) >= 0.0:
        raise NotHurwitzError(f"A has eigenvalue with real part {np.max(eigs.real):.3e} >= 0")
    eye = np.eye(n)
    K = np.kron(eye, A.T) + np.kron(A.T, eye)
    try:
        vec_p = np.linalg.solve(K, -R_mat.ravel())
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("Kronecker Lyapunov system is singular") from exc
    P = vec_p.reshape(n, n)
    P = 0.5 * (P + P.T)
    residual = np.linalg.norm(A.T @ P + P @ A + R_mat, np.inf)
    if residual > 1e-9 * np.linalg.norm(R_mat, np.inf):
        raise SingularSystemError(f"Lyapunov residual {residual:.3e} exceeds tolerance")
    return SpdMatrix(P)


def decay_rate(A) -> float:
    """Slowest decay rate of a Hurwitz matrix: min over eigenvalues of |Re|."""
    A = _as_square(A, "A")
    eigs = np.linalg.eigvals(A)
    if np.max(eigs.real) >= 0.0:
        raise NotHurwitzError(f"A has eigenvalue with real part {np.max(eigs.real):.3e} >= 0")
    return float(np.min(-eigs.real))


def invert_spd(P):
    """Inverse of an SPD matrix, validated to ||P P^-1 - I|| <= 1e-10."""
    if not isinstance(P, SpdMatrix):
        P = SpdMatrix(P)
    n = P.n
    inv = np.linalg.solve(P.mat, np.eye(n))
    inv = 0.5 * (inv + inv.T)
    if np.linalg.norm(P.mat @ inv - np.eye(n), np.inf) > 1e-10:
        raise SingularSystemError("SPD inversion failed round-trip check")
    return SpdMatrix(inv)
