"""Small dense symmetric linear algebra.

The eigensolver is a cyclic Jacobi iteration. Rotations are skipped once an
off-diagonal entry is negligible relative to the geometric mean of its two
diagonal entries, which keeps tiny eigenvalues of positive semidefinite input
accurate to high relative precision (the regularization step thresholds
eigenvalues near 1e-17).
"""
from dataclasses import dataclass

import numpy as np

from ._jit import njit
from .errors import NumericalFailure, RankDeficiencyError, ShapeError, StabilityError, SymmetryError

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100
SYMMETRY_RTOL = 1e-9


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


@njit
def jacobi_eigh(S, tol, max_sweeps):
    """Cyclic Jacobi on a symmetric matrix.

    Returns ``(w, V, sweeps)`` with unsorted eigenvalues ``w`` and eigenvectors
    in the columns of ``V``; ``sweeps`` is -1 when the sweep cap was hit.
    """
    n = S.shape[0]
    A = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            A[i, j] = 0.5 * (S[i, j] + S[j, i])
    V = np.eye(n)
    for sweep in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                if abs(apq) <= tol * np.sqrt(abs(A[p, p] * A[q, q])):
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    continue
                rotated = True
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                A[p, p] -= t * apq
                A[q, q] += t * apq
                A[p, q] = 0.0
                A[q, p] = 0.0
                for r in range(n):
                    if r != p and r != q:
                        g = A[r, p]
                        h = A[r, q]
                        A[r, p] = g - s * (h + g * tau)
                        A[p, r] = A[r, p]
                        A[r, q] = h + s * (g - h * tau)
                        A[q, r] = A[r, q]
                for r in range(n):
                    g = V[r, p]
                    h = V[r, q]
                    V[r, p] = g - s * (h + g * tau)
                    V[r, q] = h + s * (g - h * tau)
        if not rotated:
            w = np.empty(n)
            for i in range(n):
                w[i] = A[i, i]
            return w, V, sweep + 1
    w = np.empty(n)
    for i in range(n):
        w[i] = A[i, i]
    return w, V, -1


@njit
def sym_eig_kernel(S, tol, max_sweeps):
    """Sorted, sign-normalized, clamped eigendecomposition.

    Eigenvalues are descending; each eigenvector has its largest-magnitude
    entry positive; eigenvalues in ``(-n*eps*max|lambda|, 0)`` become 0.
    """
    w, V, sweeps = jacobi_eigh(S, tol, max_sweeps)
    n = w.size
    order = np.argsort(-w)
    lam = np.empty(n)
    Vs = np.empty((n, n))
    scale = 0.0
    for i in range(n):
        if abs(w[i]) > scale:
            scale = abs(w[i])
    clamp = n * 2.220446049250313e-16 * scale
    for k in range(n):
        j = order[k]
        lam[k] = w[j]
        if -clamp < lam[k] < 0.0:
            lam[k] = 0.0
        imax = 0
        vmax = -1.0
        for i in range(n):
            if abs(V[i, j]) > vmax:
                vmax = abs(V[i, j])
                imax = i
        sign = 1.0
        if V[imax, j] < 0.0:
            sign = -1.0
        for i in range(n):
            Vs[i, k] = sign * V[i, j]
    return lam, Vs, sweeps


@njit
def spectral_adj_det(V, lam):
    """``det = prod(lam)`` and ``adj = V diag(prod_{j != i} lam_j) V^T``."""
    p = lam.size
    det = 1.0
    for i in range(p):
        det *= lam[i]
    cof = np.empty(p)
    for i in range(p):
        c = 1.0
        for j in range(p):
            if j != i:
                c *= lam[j]
        cof[i] = c
    adj = np.zeros((p, p))
    for i in range(p):
        for j in range(p):
            acc = 0.0
            for k in range(p):
                acc += V[i, k] * cof[k] * V[j, k]
            adj[i, j] = acc
    return adj, det


@njit
def det_lu(M):
    """Determinant by Gaussian elimination with partial pivoting."""
    n = M.shape[0]
    if n == 0:
        return 1.0
    A = M.copy()
    det = 1.0
    for k in range(n):
        piv = k
        big = abs(A[k, k])
        for i in range(k + 1, n):
            if abs(A[i, k]) > big:
                big = abs(A[i, k])
                piv = i
        if big == 0.0:
            return 0.0
        if piv != k:
            for j in range(n):
                tmp = A[k, j]
                A[k, j] = A[piv, j]
                A[piv, j] = tmp
            det = -det
        det *= A[k, k]
        for i in range(k + 1, n):
            f = A[i, k] / A[k, k]
            for j in range(k + 1, n):
                A[i, j] -= f * A[k, j]
    return det


@njit
def cofactor_adj_det(M):
    """Adjugate from cofactors; valid for singular ``M``."""
    n = M.shape[0]
    adj = np.empty((n, n))
    if n == 1:
        adj[0, 0] = 1.0
        return adj, M[0, 0]
    minor = np.empty((n - 1, n - 1))
    for i in range(n):
        for j in range(n):
            # adj[j, i] is the (i, j) cofactor
            r = 0
            for a in range(n):
                if a == i:
                    continue
                c = 0
                for b in range(n):
                    if b == j:
                        continue
                    minor[r, c] = M[a, b]
                    c += 1
                r += 1
            sgn = 1.0 if (i + j) % 2 == 0 else -1.0
            adj[j, i] = sgn * det_lu(minor)
    return adj, det_lu(M)


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymEig:
    """Eigendecomposition of a symmetric PSD matrix split at a rank threshold."""

    V: np.ndarray
    lambdas: np.ndarray
    rank: int

    @property
    def p(self):
        return self.lambdas.size

    @property
    def V1(self):
        return self.V[:, : self.rank]

    @property
    def V2(self):
        return self.V[:, self.rank :]

    @property
    def nullspace_projector(self):
        V2 = self.V2
        return V2 @ V2.T

    def reconstruct(self):
        return (self.V * self.lambdas) @ self.V.T


@dataclass(frozen=True)
class AdjDet:
    adj: np.ndarray
    det: float


def _as_square(M, name="matrix"):
    M = np.ascontiguousarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ShapeError(f"{name} must be a non-empty square matrix, got shape {M.shape}")
    return M


def check_symmetric(S, rtol=SYMMETRY_RTOL):
    S = _as_square(S)
    asym = np.linalg.norm(S - S.T)
    if asym > rtol * max(np.linalg.norm(S), np.finfo(float).tiny):
        raise SymmetryError(f"matrix is not symmetric: ||S - S^T|| = {asym:.3e}")
    return S


def sym_eig(S, rank_threshold=0.0):
    """Eigendecomposition with eigenvalues descending and deterministic signs.

    ``rank`` counts eigenvalues ``>= rank_threshold``.
    """
    if rank_threshold < 0:
        raise ValueError("rank_threshold must be nonnegative")
    S = check_symmetric(S)
    lam, V, sweeps = sym_eig_kernel(S, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    if sweeps < 0:
        raise NumericalFailure(f"Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    rank = int(np.count_nonzero(lam >= rank_threshold))
    return SymEig(V=V, lambdas=lam, rank=rank)


def adjugate_det(M, decomposition=None, lambdas=None):
    """Adjugate and determinant of a square matrix.

    With ``decomposition`` (a :class:`SymEig` of a symmetric ``M``) the
    spectral path is used; ``lambdas`` optionally overrides the spectrum,
    which is how the regularized matrix reuses the raw eigenvectors.
    """
    M = _as_square(M)
    if decomposition is None:
        adj, det = cofactor_adj_det(M)
        return AdjDet(adj=adj, det=float(det))
    lam = decomposition.lambdas if lambdas is None else np.asarray(lambdas, dtype=np.float64)
    adj, det = spectral_adj_det(decomposition.V, lam)
    return AdjDet(adj=adj, det=float(det))


def is_hurwitz(A):
    return bool(np.all(np.linalg.eigvals(A).real < 0.0))


def solve_lyapunov(A_ref, Q):
    """Solve ``A_ref^T P + P A_ref + Q = 0`` through the vectorized linear system."""
    A_ref = _as_square(A_ref, "A_ref")
    Q = check_symmetric(_as_square(Q, "Q"))
    n = A_ref.shape[0]
    if Q.shape != (n, n):
        raise ShapeError(f"Q must be {n}x{n}")
    try:
        np.linalg.cholesky(Q)
    except np.linalg.LinAlgError:
        raise ValueError("Q must be symmetric positive definite") from None
    if not is_hurwitz(A_ref):
        raise StabilityError("A_ref is not Hurwitz; the Lyapunov equation has no positive definite solution")
    eye = np.eye(n)
    # column-major vec: vec(A^T P) = (I kron A^T) vec P, vec(P A) = (A^T kron I) vec P
    K = np.kron(eye, A_ref.T) + np.kron(A_ref.T, eye)
    try:
        vecP = np.linalg.solve(K, -Q.reshape(-1, order="F"))
    except np.linalg.LinAlgError:
        raise StabilityError("singular Lyapunov operator; A_ref is not Hurwitz") from None
    P = vecP.reshape((n, n), order="F")
    P = 0.5 * (P + P.T)
    try:
        np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        raise StabilityError("Lyapunov solution is not positive definite") from None
    return P


def lyapunov_residual(A_ref, P, Q):
    return float(np.linalg.norm(A_ref.T @ P + P @ A_ref + Q))


def pinv(B):
    """Left inverse ``(B^T B)^-1 B^T`` of a full-column-rank matrix."""
    B = np.asarray(B, dtype=np.float64)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    if B.ndim != 2:
        raise ShapeError(f"B must be a matrix, got shape {B.shape}")
    n, m = B.shape
    if m > n or np.linalg.matrix_rank(B) < m:
        raise RankDeficiencyError(f"B ({n}x{m}) does not have full column rank")
    return np.linalg.solve(B.T @ B, B.T)
