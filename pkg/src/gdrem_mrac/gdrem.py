"""Generalized dynamic regressor extension and mixing.

Pipeline for a regression ``z = theta^T phibar``:

1. extension: ``phi = H[phibar phibar^T]``, ``y = H[phibar z^T]`` with
   ``H = 1/(s + k0)``;
2. regularization: eigenvalues of ``phi`` below ``eps_bar`` are replaced by the
   virtual eigenvalue ``eps`` (and ``Phi = 0`` when all of them are);
3. mixing: ``Upsilon = adj(Phi) y``, ``omega = det(Phi)``.

The result is ``Upsilon = omega * Theta`` where ``Theta`` is the projection of
``theta`` onto the excited subspace of ``phi``.
"""
from dataclasses import dataclass

import numpy as np

from ._jit import njit
from .errors import ShapeError
from .linalg import JACOBI_MAX_SWEEPS, JACOBI_TOL, SymEig, spectral_adj_det, sym_eig, sym_eig_kernel


@dataclass(frozen=True)
class GdremConfig:
    k0: float = 10.0
    epsilon: float = 1e-8
    epsilon_bar: float = 1e-17
    mu: float = 1e-8

    def __post_init__(self):
        if not self.k0 > 0:
            raise ValueError("k0 must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.epsilon_bar >= 0:
            raise ValueError("epsilon_bar must be nonnegative")
        if not self.mu > 0:
            raise ValueError("mu must be positive")

    def gain_threshold(self, p):
        """``min(mu^p, eps^p)``: below it the estimator runs on the fallback gain."""
        return min(self.mu**p, self.epsilon**p)


@dataclass(frozen=True)
class GdremState:
    phi: np.ndarray
    y: np.ndarray
    d: np.ndarray
    Phi: np.ndarray
    Upsilon: np.ndarray
    omega: float
    eps_term: np.ndarray
    decomposition: SymEig
    all_clipped: bool

    @classmethod
    def zeros(cls, p, m, cfg=None):
        cfg = cfg or GdremConfig()
        return cls.from_filters(np.zeros((p, p)), np.zeros((p, m)), np.zeros((p, m)), cfg)

    @classmethod
    def from_filters(cls, phi, y, d, cfg):
        """Run regularization and mixing on given filter states."""
        Phi, dec, clipped = regularize(phi, cfg)
        Upsilon, omega = mix(Phi, y, dec, _clipped=clipped)
        eps_term = decay_diagnostic(d, Phi, dec, _clipped=clipped)
        return cls(
            phi=np.asarray(phi, dtype=np.float64),
            y=np.asarray(y, dtype=np.float64),
            d=np.asarray(d, dtype=np.float64),
            Phi=Phi,
            Upsilon=Upsilon,
            omega=omega,
            eps_term=eps_term,
            decomposition=dec,
            all_clipped=clipped,
        )


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


@njit
def clip_spectrum(lam, eps, eps_bar):
    """Virtual eigenvalues; returns ``(lam_bar, all_clipped)``."""
    p = lam.size
    lam_bar = np.empty(p)
    all_clipped = True
    for i in range(p):
        if lam[i] >= eps_bar:
            lam_bar[i] = lam[i]
            all_clipped = False
        else:
            lam_bar[i] = eps
    return lam_bar, all_clipped


@njit
def regularize_mix_kernel(phi, y, d, eps, eps_bar):
    """Regularize and mix in a single pass.

    Returns ``(lam, V, lam_bar, all_clipped, adj, omega, Upsilon, eps_term, sweeps)``;
    ``adj`` is the adjugate of the regularized matrix (zero when all clipped).
    """
    lam, V, sweeps = sym_eig_kernel(phi, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    lam_bar, all_clipped = clip_spectrum(lam, eps, eps_bar)
    p = lam.size
    m = y.shape[1]
    if all_clipped:
        adj = np.zeros((p, p))
        omega = 0.0
        Upsilon = np.zeros((p, m))
        eps_term = np.zeros((p, m))
    else:
        adj, omega = spectral_adj_det(V, lam_bar)
        Upsilon = adj @ y
        eps_term = adj @ d
    return lam, V, lam_bar, all_clipped, adj, omega, Upsilon, eps_term, sweeps


@njit
def project_out_nullspace(theta, lam, V, eps_bar):
    """``theta - V2 V2^T theta`` with ``V2`` the eigenvectors whose eigenvalue is below ``eps_bar``."""
    p = lam.size
    out = theta.copy()
    for k in range(p):
        if lam[k] < eps_bar:
            for j in range(theta.shape[1]):
                c = 0.0
                for i in range(p):
                    c += V[i, k] * theta[i, j]
                for i in range(p):
                    out[i, j] -= V[i, k] * c
    return out


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def extend_derivatives(state, phi_bar, z, decay_input, k0):
    """Right-hand sides of the extension filters.

    ``decay_input`` drives the diagnostic filter ``d`` that carries the
    initial-condition term of the regression; pass zeros when unknown.
    """
    phi_bar = np.asarray(phi_bar, dtype=np.float64).reshape(-1)
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    decay_input = np.asarray(decay_input, dtype=np.float64)
    p = phi_bar.size
    phi, y, d = (state.phi, state.y, state.d) if isinstance(state, GdremState) else state
    m = y.shape[1]
    if phi.shape != (p, p) or y.shape != (p, m) or z.size != m:
        raise ShapeError("inconsistent extension shapes")
    if d.shape != (p, m) or decay_input.shape != (p, m):
        raise ShapeError("decay input must be p x m")
    dphi = -k0 * phi + np.outer(phi_bar, phi_bar)
    dy = -k0 * y + np.outer(phi_bar, z)
    dd = -k0 * d + decay_input
    return dphi, dy, dd


def regularize(phi, cfg):
    """Return ``(Phi, decomposition, all_clipped)``.

    The decomposition uses ``epsilon_bar`` as its rank threshold.
    """
    dec = sym_eig(phi, cfg.epsilon_bar)
    lam_bar, all_clipped = clip_spectrum(dec.lambdas, cfg.epsilon, cfg.epsilon_bar)
    if all_clipped:
        return np.zeros_like(dec.V), dec, True
    Phi = (dec.V * lam_bar) @ dec.V.T
    return Phi, dec, False


def _spectrum_of(Phi, decomposition):
    if decomposition is None:
        decomposition = sym_eig(Phi)
    V = decomposition.V
    lam_bar = np.einsum("ij,ik,kj->j", V, Phi, V)
    return V, lam_bar


def mix(Phi, y, decomposition=None, _clipped=None):
    """``(adj(Phi) y, det(Phi))`` via the spectral path."""
    Phi = np.asarray(Phi, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y.reshape(-1, 1)
    if _clipped is None:
        _clipped = not np.any(Phi)
    if _clipped:
        return np.zeros_like(y), 0.0
    V, lam_bar = _spectrum_of(Phi, decomposition)
    adj, det = spectral_adj_det(V, lam_bar)
    return adj @ y, float(det)


def indistinguishable_params(theta, decomposition):
    """``Theta = theta - V2 V2^T theta``."""
    theta = np.asarray(theta, dtype=np.float64)
    vector = theta.ndim == 1
    if vector:
        theta = theta.reshape(-1, 1)
    Theta = theta - decomposition.nullspace_projector @ theta
    return Theta.reshape(-1) if vector else Theta


def decay_diagnostic(d, Phi, decomposition=None, _clipped=None):
    """``adj(Phi) d``; vanishes exponentially along closed-loop runs."""
    eps_term, _ = mix(Phi, d, decomposition, _clipped=_clipped)
    return eps_term
