"""Plant with matched uncertainty, reference model, control law and the
filtered parametrization that turns the tracking error into a static regression.

Plant:      dx/dt    = A x + B (u - theta(t)^T Psi(x, t))
Reference:  dxref/dt = A_ref xref + B_ref z_cmd(t)
Control:    u = K_x x + K_r z_cmd + theta_hat^T Psi - kappa B^T P e_ref |Psi|^2

Regressors, true parameters and commands are small closed-form families
identified by integer codes so that compiled kernels can evaluate them.
"""
from dataclasses import dataclass, field

import numpy as np

from ._jit import njit
from .errors import ModelMismatchError, NumericalFailure, ShapeError, StabilityError
from .linalg import is_hurwitz, pinv, solve_lyapunov

MATCH_TOL = 1e-9

# regressor families
PSI_SWITCHED, PSI_HARMONIC, PSI_WING_ROCK, PSI_DECAYING, PSI_CONSTANT, PSI_STATE = range(6)
REGRESSORS = {
    "switched": PSI_SWITCHED,
    "harmonic": PSI_HARMONIC,
    "wing_rock": PSI_WING_ROCK,
    "decaying": PSI_DECAYING,
    "constant": PSI_CONSTANT,
    "state": PSI_STATE,
}


@njit
def eval_regressor(kind, params, x, t, out):
    """Fill ``out`` with Psi(x, t).

    switched:  params = [t_switch, w, a, b, a', b'] -> a + b cos(w t), primed after t_switch
    harmonic:  params = [w, c_1..c_p]         -> cos(w t) c
    wing_rock: no params                      -> [x1, x2, |x1| x2, |x2| x2, x1^3]
    decaying:  params = [rate, c_1..c_p]      -> exp(-rate t) c
    constant:  params = [c_1..c_p]            -> c
    state:     no params                      -> x
    """
    p = out.size
    if kind == PSI_SWITCHED:
        # params = [t_switch, w, a_1..a_p, b_1..b_p, a'_1..a'_p, b'_1..b'_p]
        # entry i = a_i + b_i cos(w t) before the switch, a'_i + b'_i cos(w t) after
        c = np.cos(params[1] * t)
        off = 2 if t < params[0] else 2 + 2 * p
        for i in range(p):
            out[i] = params[off + i] + params[off + p + i] * c
    elif kind == PSI_HARMONIC:
        c = np.cos(params[0] * t)
        for i in range(p):
            out[i] = c * params[1 + i]
    elif kind == PSI_WING_ROCK:
        x1 = x[0]
        x2 = x[1]
        out[0] = x1
        out[1] = x2
        out[2] = abs(x1) * x2
        out[3] = abs(x2) * x2
        out[4] = x1 * x1 * x1
    elif kind == PSI_DECAYING:
        e = np.exp(-params[0] * t)
        for i in range(p):
            out[i] = e * params[1 + i]
    elif kind == PSI_CONSTANT:
        for i in range(p):
            out[i] = params[i]
    else:
        for i in range(p):
            out[i] = x[i]


@njit
def eval_schedule(base, amp, freq, t, out):
    """``out = base + amp * sin(freq * t)`` over flat arrays."""
    for i in range(base.size):
        if amp[i] == 0.0:
            out[i] = base[i]
        else:
            out[i] = base[i] + amp[i] * np.sin(freq[i] * t)


@dataclass(frozen=True)
class Regressor:
    """Psi(x, t) from a named family."""

    kind: str
    p: int
    params: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if self.kind not in REGRESSORS:
            raise ValueError(f"unknown regressor {self.kind!r}; choose from {', '.join(REGRESSORS)}")
        object.__setattr__(self, "params", np.asarray(self.params, dtype=np.float64).reshape(-1))
        need = {
            "switched": 2 + 4 * self.p,
            "harmonic": 1 + self.p,
            "wing_rock": 0,
            "decaying": 1 + self.p,
            "constant": self.p,
            "state": 0,
        }[self.kind]
        if self.params.size != need:
            raise ShapeError(f"{self.kind} regressor with p={self.p} needs {need} parameters, got {self.params.size}")
        if self.kind == "wing_rock" and self.p != 5:
            raise ShapeError("wing_rock regressor has p = 5")

    @property
    def code(self):
        return REGRESSORS[self.kind]

    def __call__(self, x, t):
        out = np.empty(self.p)
        eval_regressor(self.code, self.params, np.asarray(x, dtype=np.float64), float(t), out)
        return out

    @classmethod
    def switched(cls, t_switch, w, before_const, before_cos, after_const, after_cos):
        """Entries ``a_i + b_i cos(w t)`` with one set of coefficients before ``t_switch`` and another after."""
        blocks = [np.asarray(b, dtype=np.float64).reshape(-1) for b in (before_const, before_cos, after_const, after_cos)]
        return cls("switched", blocks[0].size, np.concatenate([[t_switch, w], *blocks]))

    @classmethod
    def harmonic(cls, w, direction):
        direction = np.asarray(direction, dtype=np.float64).reshape(-1)
        return cls("harmonic", direction.size, np.concatenate([[w], direction]))

    @classmethod
    def decaying(cls, rate, direction):
        direction = np.asarray(direction, dtype=np.float64).reshape(-1)
        return cls("decaying", direction.size, np.concatenate([[rate], direction]))

    @classmethod
    def wing_rock(cls):
        return cls("wing_rock", 5)


@dataclass(frozen=True)
class Schedule:
    """Entrywise ``base + amp * sin(freq * t)``; constant when ``amp`` is zero."""

    base: np.ndarray
    amp: np.ndarray = None
    freq: np.ndarray = None

    def __post_init__(self):
        base = np.atleast_1d(np.asarray(self.base, dtype=np.float64))
        amp = np.zeros_like(base) if self.amp is None else np.asarray(self.amp, dtype=np.float64).reshape(base.shape)
        freq = np.zeros_like(base) if self.freq is None else np.asarray(self.freq, dtype=np.float64).reshape(base.shape)
        object.__setattr__(self, "base", np.ascontiguousarray(base))
        object.__setattr__(self, "amp", np.ascontiguousarray(amp))
        object.__setattr__(self, "freq", np.ascontiguousarray(freq))

    @property
    def shape(self):
        return self.base.shape

    @property
    def is_constant(self):
        return not np.any(self.amp)

    def __call__(self, t):
        out = np.empty(self.base.size)
        eval_schedule(self.base.ravel(), self.amp.ravel(), self.freq.ravel(), float(t), out)
        return out.reshape(self.base.shape)


@dataclass(frozen=True)
class MracSystem:
    A: np.ndarray
    B: np.ndarray
    A_ref: np.ndarray
    B_ref: np.ndarray
    K_x: np.ndarray
    K_r: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    kappa: float
    theta: Schedule
    psi: Regressor
    z_cmd: Schedule
    x0: np.ndarray
    x0ref: np.ndarray

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.psi.p

    @property
    def B_dag(self):
        return pinv(self.B)

    def theta_at(self, t):
        return self.theta(t)

    def validate(self):
        n, m, p = self.n, self.m, self.p
        shapes = {
            "A": (self.A, (n, n)),
            "B": (self.B, (n, m)),
            "A_ref": (self.A_ref, (n, n)),
            "B_ref": (self.B_ref, (n, m)),
            "K_x": (self.K_x, (m, n)),
            "K_r": (self.K_r, (m, m)),
            "P": (self.P, (n, n)),
            "Q": (self.Q, (n, n)),
            "x0": (self.x0, (n,)),
            "x0ref": (self.x0ref, (n,)),
        }
        for name, (arr, shape) in shapes.items():
            if np.shape(arr) != shape:
                raise ShapeError(f"{name} has shape {np.shape(arr)}, expected {shape}")
        if self.theta.shape != (p, m):
            raise ShapeError(f"theta has shape {self.theta.shape}, expected {(p, m)}")
        if self.z_cmd.shape != (m,):
            raise ShapeError(f"z_cmd has shape {self.z_cmd.shape}, expected {(m,)}")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        scale = 1.0 + np.linalg.norm(self.A_ref)
        if np.linalg.norm(self.A + self.B @ self.K_x - self.A_ref) > MATCH_TOL * scale:
            raise ModelMismatchError("A + B K_x does not reproduce A_ref")
        if np.linalg.norm(self.B @ self.K_r - self.B_ref) > MATCH_TOL * (1.0 + np.linalg.norm(self.B_ref)):
            raise ModelMismatchError("B K_r does not reproduce B_ref")
        if not is_hurwitz(self.A_ref):
            raise StabilityError("A_ref is not Hurwitz")
        res = np.linalg.norm(self.A_ref.T @ self.P + self.P @ self.A_ref + self.Q)
        if res > 1e-9 * max(1.0, np.linalg.norm(self.Q)):
            raise StabilityError(f"P does not solve the Lyapunov equation (residual {res:.2e})")
        return self


def compute_gains(A, B, A_ref, B_ref, Q):
    """``K_x = -B^+ (A - A_ref)``, ``K_r = B^+ B_ref`` and the Lyapunov matrix ``P``."""
    A, A_ref, Q = (np.atleast_2d(np.asarray(M, dtype=np.float64)) for M in (A, A_ref, Q))
    B = np.asarray(B, dtype=np.float64)
    B = B.reshape(-1, 1) if B.ndim == 1 else B
    B_ref = np.asarray(B_ref, dtype=np.float64)
    B_ref = B_ref.reshape(-1, 1) if B_ref.ndim == 1 else B_ref
    n = A.shape[0]
    if A.shape != (n, n) or A_ref.shape != (n, n) or B.shape[0] != n or B_ref.shape != B.shape:
        raise ShapeError("inconsistent plant/reference dimensions")
    B_dag = pinv(B)
    proj = np.eye(n) - B @ B_dag
    if np.linalg.norm(proj @ (A - A_ref)) > MATCH_TOL * (1.0 + np.linalg.norm(A - A_ref)):
        raise ModelMismatchError("A - A_ref is not in the range of B; no K_x reproduces A_ref")
    if np.linalg.norm(proj @ B_ref) > MATCH_TOL * (1.0 + np.linalg.norm(B_ref)):
        raise ModelMismatchError("B_ref is not in the range of B; no K_r reproduces B_ref")
    K_x = -B_dag @ (A - A_ref)
    K_r = B_dag @ B_ref
    P = solve_lyapunov(A_ref, Q)
    return K_x, K_r, P


# ---------------------------------------------------------------------------
# control, plant, parametrization
# ---------------------------------------------------------------------------


@njit
def control_kernel(K_x, K_r, BtP, kappa, x, x_ref, z_val, theta_hat, psi):
    """Returns ``(u, u_bl, u_ad, u_nd)``."""
    e = x - x_ref
    u_bl = K_x @ x + K_r @ z_val
    m = u_bl.size
    p = psi.size
    u_ad = np.zeros(m)
    for j in range(m):
        acc = 0.0
        for i in range(p):
            acc += theta_hat[i, j] * psi[i]
        u_ad[j] = acc
    psi2 = 0.0
    for i in range(p):
        psi2 += psi[i] * psi[i]
    u_nd = -kappa * psi2 * (BtP @ e)
    return u_bl + u_ad + u_nd, u_bl, u_ad, u_nd


@njit
def plant_kernel(A, B, x, u, theta, psi):
    m = u.size
    p = psi.size
    w = np.empty(m)
    for j in range(m):
        acc = u[j]
        for i in range(p):
            acc -= theta[i, j] * psi[i]
        w[j] = acc
    return A @ x + B @ w


@njit
def parametrization_kernel(B_dag, A_ref, l, e_ref, e_bar, v_bar, psi_bar):
    """Returns ``(phi_bar, z, norm)`` with ``norm = 1 + |psi_bar|^2``."""
    norm = 1.0
    for i in range(psi_bar.size):
        norm += psi_bar[i] * psi_bar[i]
    chi = e_ref - l * e_bar - A_ref @ e_bar
    z = -(B_dag @ chi - v_bar) / norm
    return psi_bar / norm, z, norm


def compute_control(sys, x, x_ref, z_cmd_val, theta_hat, psi_val):
    """Return ``(u, u_bl, u_ad, u_nd)``."""
    x = np.asarray(x, dtype=np.float64)
    x_ref = np.asarray(x_ref, dtype=np.float64)
    z = np.atleast_1d(np.asarray(z_cmd_val, dtype=np.float64))
    th = np.asarray(theta_hat, dtype=np.float64)
    th = th.reshape(-1, 1) if th.ndim == 1 else th
    psi = np.asarray(psi_val, dtype=np.float64).reshape(-1)
    BtP = sys.B.T @ sys.P
    return control_kernel(sys.K_x, sys.K_r, BtP, float(sys.kappa), x, x_ref, z, np.ascontiguousarray(th), psi)


def plant_derivative(sys, x, u, t):
    x = np.asarray(x, dtype=np.float64)
    psi = sys.psi(x, t)
    if not np.all(np.isfinite(psi)):
        raise NumericalFailure(f"non-finite regressor value at t = {t}")
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    return plant_kernel(sys.A, sys.B, x, u, sys.theta(t), psi)


def reference_derivative(sys, x_ref, z_cmd_val):
    z = np.atleast_1d(np.asarray(z_cmd_val, dtype=np.float64))
    return sys.A_ref @ np.asarray(x_ref, dtype=np.float64) + sys.B_ref @ z


@dataclass
class ParametrizationState:
    """Filters ``1/(s + l)`` applied to Psi, e_ref and u_ad + u_nd."""

    psi_bar: np.ndarray
    e_bar: np.ndarray
    v_bar: np.ndarray
    l: float = 10.0

    def __post_init__(self):
        if not self.l > 0:
            raise ValueError("l must be positive")

    @classmethod
    def zeros(cls, n, m, p, l=10.0):
        return cls(np.zeros(p), np.zeros(n), np.zeros(m), l)


def parametrize_step(par, sys, e_ref, psi_val, u_ad, u_nd):
    """Return ``(phi_bar, z, (dpsi_bar, de_bar, dv_bar))``.

    ``z = theta^T phi_bar`` up to a term decaying like ``exp(-l t) e_ref(0)``.
    """
    e_ref = np.asarray(e_ref, dtype=np.float64)
    psi_val = np.asarray(psi_val, dtype=np.float64).reshape(-1)
    u_ad = np.atleast_1d(np.asarray(u_ad, dtype=np.float64))
    u_nd = np.atleast_1d(np.asarray(u_nd, dtype=np.float64))
    phi_bar, z, _ = parametrization_kernel(sys.B_dag, sys.A_ref, float(par.l), e_ref, par.e_bar, par.v_bar, par.psi_bar)
    derivs = (
        -par.l * par.psi_bar + psi_val,
        -par.l * par.e_bar + e_ref,
        -par.l * par.v_bar + u_ad + u_nd,
    )
    return phi_bar, z, derivs
