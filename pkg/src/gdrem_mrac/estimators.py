"""Adaptive laws: the G-DREM law with switched gain and three classical baselines.

All laws are returned as derivatives; the simulator integrates them together
with the plant.  Parameter matrices are ``p x m`` (regressor dimension by
number of inputs).
"""
from dataclasses import dataclass, field

import numpy as np

from ._jit import njit
from .errors import NumericalFailure, ShapeError
from .linalg import cofactor_adj_det

ESTIMATORS = ("gdrem", "gradient", "rls", "drem")
GDREM, GRADIENT, RLS, DREM = range(4)


@dataclass(frozen=True)
class EstimatorConfig:
    """Estimator selection plus gains for every law.

    ``gamma0``/``gamma1`` belong to the G-DREM law, ``gradient_gain`` is the
    scalar multiplying the identity in the gradient law, ``rls_gamma0`` the
    initial RLS gain matrix scale, ``drem_gamma`` the DREM gain.
    """

    kind: str = "gdrem"
    gamma0: float = 10.0
    gamma1: float = 1.0
    gradient_gain: float = 100.0
    rls_gamma0: float = 100.0
    lambda_f: float = 1.0
    drem_gamma: float = 1e4
    theta0: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.kind not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.kind!r}; choose from {', '.join(ESTIMATORS)}")
        for name in ("gamma0", "gamma1", "gradient_gain", "rls_gamma0", "lambda_f", "drem_gamma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def code(self):
        return ESTIMATORS.index(self.kind)


@dataclass
class EstimatorState:
    theta_hat: np.ndarray
    gamma0: float = 10.0
    gamma1: float = 1.0
    Gamma: np.ndarray = None
    lambda_f: float = 1.0

    def __post_init__(self):
        self.theta_hat = np.atleast_2d(np.asarray(self.theta_hat, dtype=np.float64))
        if self.theta_hat.shape[0] == 1 and self.theta_hat.shape[1] > 1:
            self.theta_hat = self.theta_hat.T
        if not (self.gamma0 > 0 and self.gamma1 > 0 and self.lambda_f > 0):
            raise ValueError("estimator gains must be positive")


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


@njit
def gdrem_rate(omega, threshold, gamma0, gamma1):
    """``gamma(omega) * omega`` written so that small ``omega`` never overflows."""
    if omega <= threshold:
        return gamma1 * omega
    return gamma0 / omega


@njit
def gdrem_law_kernel(theta_hat, omega, Upsilon, threshold, gamma0, gamma1):
    rate = gdrem_rate(omega, threshold, gamma0, gamma1)
    return -rate * (omega * theta_hat - Upsilon)


@njit
def gradient_law_kernel(theta_hat, phi_bar, z, Gamma):
    p, m = theta_hat.shape
    err = np.empty(m)
    for j in range(m):
        acc = -z[j]
        for i in range(p):
            acc += theta_hat[i, j] * phi_bar[i]
        err[j] = acc
    g = Gamma @ phi_bar
    out = np.empty((p, m))
    for i in range(p):
        for j in range(m):
            out[i, j] = -g[i] * err[j]
    return out


@njit
def rls_gain_kernel(Gamma, phi_bar, lambda_f):
    g = Gamma @ phi_bar
    p = g.size
    out = np.empty((p, p))
    for i in range(p):
        for j in range(p):
            out[i, j] = lambda_f * Gamma[i, j] - g[i] * g[j]
    return out


@njit
def drem_law_kernel(theta_hat, phi, y, adj_phi, gamma):
    return -gamma * (adj_phi @ (phi @ theta_hat - y))


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def _as_params(theta_hat):
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    return theta_hat.reshape(-1, 1) if theta_hat.ndim == 1 else theta_hat


def gdrem_gain(omega, cfg, gamma0, gamma1, p):
    """Switched gain: ``gamma1`` below ``min(mu^p, eps^p)``, else ``gamma0 / omega^2``."""
    if omega < 0:
        raise ValueError("omega must be nonnegative")
    if omega <= cfg.gain_threshold(p):
        return float(gamma1)
    return float(gamma0 / omega**2)


def gdrem_law_derivative(est, omega, Upsilon, cfg):
    """``-gamma * omega * (omega * theta_hat - Upsilon)``."""
    theta_hat = est.theta_hat
    Upsilon = _as_params(Upsilon)
    if Upsilon.shape != theta_hat.shape:
        raise ShapeError(f"Upsilon shape {Upsilon.shape} != theta_hat shape {theta_hat.shape}")
    p = theta_hat.shape[0]
    return gdrem_law_kernel(theta_hat, float(omega), Upsilon, cfg.gain_threshold(p), est.gamma0, est.gamma1)


def baseline_gradient_derivative(theta_hat, phi_bar, z, Gamma):
    """Gradient law ``-Gamma phibar (phibar^T theta_hat - z)^T``."""
    theta_hat = _as_params(theta_hat)
    phi_bar = np.asarray(phi_bar, dtype=np.float64).reshape(-1)
    z = np.atleast_1d(np.asarray(z, dtype=np.float64)).reshape(-1)
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=np.float64))
    p, m = theta_hat.shape
    if phi_bar.size != p or z.size != m or Gamma.shape != (p, p):
        raise ShapeError("inconsistent gradient-law shapes")
    return gradient_law_kernel(theta_hat, phi_bar, z, Gamma)


def baseline_rls_derivative(theta_hat, Gamma, phi_bar, z, lambda_f, check_tol=1e-12):
    """Least squares with forgetting; returns ``(dtheta_hat, dGamma)``."""
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=np.float64))
    if not lambda_f > 0:
        raise ValueError("lambda_f must be positive")
    sym = 0.5 * (Gamma + Gamma.T)
    scale = max(1.0, float(np.abs(sym).max()))
    if np.linalg.eigvalsh(sym).min() <= -check_tol * scale or np.linalg.norm(Gamma - Gamma.T) > check_tol * scale:
        raise NumericalFailure("RLS gain matrix lost positive definiteness")
    dtheta = baseline_gradient_derivative(theta_hat, phi_bar, z, Gamma)
    phi_bar = np.asarray(phi_bar, dtype=np.float64).reshape(-1)
    return dtheta, rls_gain_kernel(Gamma, phi_bar, float(lambda_f))


def baseline_drem_derivative(theta_hat, phi, y, gamma):
    """DREM law ``-gamma adj(phi) (phi theta_hat - y)``."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    theta_hat = _as_params(theta_hat)
    phi = np.atleast_2d(np.asarray(phi, dtype=np.float64))
    y = _as_params(y)
    p, m = theta_hat.shape
    if phi.shape != (p, p) or y.shape != (p, m):
        raise ShapeError("inconsistent DREM shapes")
    adj, _ = cofactor_adj_det(np.ascontiguousarray(phi))
    return drem_law_kernel(theta_hat, phi, y, adj, float(gamma))
