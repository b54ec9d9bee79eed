"""Fixed-step closed-loop simulation and the built-in experiment cases.

The augmented state integrated by one classical RK4 step is

    x, x_ref, psi_bar, e_bar, v_bar, phi, y, d, theta_hat, Gamma

(``Gamma`` is only driven by the least-squares baseline).  Every right-hand
side evaluation recomputes the eigendecomposition of ``phi``; nothing is
tracked across steps.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._jit import njit
from .errors import ConfigError, GdremError, IntegrationError
from .estimators import DREM, GDREM, GRADIENT, RLS, EstimatorConfig, drem_law_kernel, gdrem_law_kernel, gdrem_rate
from .estimators import gradient_law_kernel, rls_gain_kernel
from .gdrem import GdremConfig, project_out_nullspace, regularize_mix_kernel
from .linalg import spectral_adj_det
from .mrac import (
    MracSystem,
    Regressor,
    Schedule,
    compute_gains,
    control_kernel,
    eval_regressor,
    eval_schedule,
    parametrization_kernel,
    plant_kernel,
)

BASELINE_K_X = np.array([[-5.2915, -3.2547]])
BASELINE_K_R = np.array([[-5.2915]])

DEFAULT_HORIZON = {1: 10.0, 2: 10.0, 3: 20.0}

STATUS_OK, STATUS_NONFINITE, STATUS_EIG = 0, 1, 2


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    system: MracSystem
    gdrem: GdremConfig = field(default_factory=GdremConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    l: float = 10.0
    dt: float = 1e-4
    t_final: float = 10.0
    record_every: int = 10
    case_id: int = None
    name: str = None

    def validate(self):
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if not self.t_final > self.dt:
            raise ConfigError("t_final must exceed dt")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ConfigError("record_every must be a positive integer")
        if not self.l > 0:
            raise ConfigError("l must be positive")
        if self.estimator.kind == "gdrem" and not self.estimator.gamma0 > 1.0 / (2.0 * self.system.kappa):
            raise ConfigError(
                f"gamma0 = {self.estimator.gamma0} violates gamma0 > 1/(2*kappa) = {1.0 / (2.0 * self.system.kappa)}"
            )
        try:
            self.system.validate()
        except (GdremError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        th0 = self.estimator.theta0
        if th0 is not None and np.asarray(th0).reshape(-1).size != self.system.p * self.system.m:
            raise ConfigError("theta0 must have p*m entries")
        return self

    @property
    def label(self):
        if self.name:
            return self.name
        return f"case{self.case_id}" if self.case_id is not None else "scenario"

    @property
    def n_steps(self):
        return int(round(self.t_final / self.dt))

    def with_overrides(self, **kwargs):
        """Replace top-level fields; ``gamma0``/``kind`` etc. route to the estimator."""
        est_fields = {k: kwargs.pop(k) for k in list(kwargs) if k in EstimatorConfig.__dataclass_fields__}
        gd_fields = {k: kwargs.pop(k) for k in list(kwargs) if k in GdremConfig.__dataclass_fields__}
        sys_fields = {k: kwargs.pop(k) for k in list(kwargs) if k in ("kappa", "x0", "x0ref", "theta", "psi", "z_cmd")}
        cfg = replace(self, **kwargs)
        if est_fields:
            cfg = replace(cfg, estimator=replace(cfg.estimator, **est_fields))
        if gd_fields:
            cfg = replace(cfg, gdrem=replace(cfg.gdrem, **gd_fields))
        if sys_fields:
            cfg = replace(cfg, system=replace(cfg.system, **sys_fields))
        return cfg


def _plant_2d(theta, psi, z_cmd=None, x0=(-1.0, 0.0), kappa=1.0):
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    B = np.array([[0.0], [1.0]])
    A_ref = A + B @ BASELINE_K_X
    B_ref = B @ BASELINE_K_R
    Q = np.eye(2)
    K_x, K_r, P = compute_gains(A, B, A_ref, B_ref, Q)
    x0 = np.asarray(x0, dtype=np.float64)
    return MracSystem(
        A=A,
        B=B,
        A_ref=A_ref,
        B_ref=B_ref,
        K_x=K_x,
        K_r=K_r,
        P=P,
        Q=Q,
        kappa=kappa,
        theta=theta,
        psi=psi,
        z_cmd=z_cmd if z_cmd is not None else Schedule(np.ones(1)),
        x0=x0.copy(),
        x0ref=x0.copy(),
    )


def build_case(case_id):
    """Built-in scenario 1, 2 or 3 with its fixed constants."""
    if case_id == 1:
        theta = Schedule(np.array([[-1.75], [0.5]]))
        psi = Regressor.switched(5.0, 10.0, [1.0, 0.0], [0.0, -5.0], [0.0, 0.0], [1.0, -5.0])
    elif case_id == 2:
        theta = Schedule(np.array([[0.0], [0.5]]), amp=np.array([[-1.75], [0.0]]), freq=np.array([[25.0], [0.0]]))
        psi = Regressor.harmonic(10.0, [1.0, -5.0])
    elif case_id == 3:
        theta = Schedule(np.array([[-22.22], [23.74], [-82.66], [31.45], [73.33]]))
        psi = Regressor.wing_rock()
    else:
        raise ConfigError(f"unknown case id {case_id!r}; built-in cases are 1, 2, 3")
    return ScenarioConfig(
        system=_plant_2d(theta, psi),
        gdrem=GdremConfig(k0=10.0, epsilon=1e-8, epsilon_bar=1e-17, mu=1e-8),
        estimator=EstimatorConfig(kind="gdrem", gamma0=10.0, gamma1=1.0),
        l=10.0,
        dt=1e-4,
        t_final=DEFAULT_HORIZON[case_id],
        record_every=10,
        case_id=case_id,
    )


def build_unexcited_case(t_final=100.0, rate=1.0):
    """Case 1 plant with the vanishing regressor ``exp(-rate t) [1, 1]``."""
    base = build_case(1)
    psi = Regressor.decaying(rate, [1.0, 1.0])
    return replace(base, system=replace(base.system, psi=psi), t_final=t_final, case_id=None, name="unexcited")


# ---------------------------------------------------------------------------
# trace layout
# ---------------------------------------------------------------------------


def _vec(prefix, k):
    return [f"{prefix}{i + 1}" for i in range(k)]


def _mat(prefix, rows, cols):
    return [f"{prefix}_{i + 1}_{j + 1}" for i in range(rows) for j in range(cols)]


def csv_columns(n, m, p):
    """Column names written to trace CSV files, in order."""
    return (
        ["t"]
        + _vec("x", n)
        + _vec("xref", n)
        + _vec("eref", n)
        + _vec("u", m)
        + _vec("u_bl", m)
        + _vec("u_ad", m)
        + _vec("u_nd", m)
        + _vec("phibar", p)
        + _vec("z", m)
        + ["omega"]
        + _vec("lambda", p)
        + ["rank"]
        + _mat("thetahat", p, m)
        + _mat("Theta", p, m)
        + ["norm_Theta_err", "norm_theta_err", "eps_norm"]
    )


def extra_columns(n, m, p):
    """In-memory diagnostics recorded next to the CSV columns."""
    return (
        _vec("psi", p)
        + _mat("theta", p, m)
        + _vec("uncertainty", m)
        + _mat("proj", p, p)
        + _vec("zres", m)
        + ["eff_rate", "all_clipped", "sweeps"]
    )


def state_names(n, m, p):
    return (
        _vec("x", n)
        + _vec("xref", n)
        + _vec("psibar", p)
        + _vec("ebar", n)
        + _vec("vbar", m)
        + _mat("phi", p, p)
        + _mat("y", p, m)
        + _mat("d", p, m)
        + _mat("thetahat", p, m)
        + _mat("Gamma", p, p)
    )


def state_size(n, m, p):
    return 3 * n + p + m + 2 * p * p + 3 * p * m


@dataclass(frozen=True)
class Trace:
    """Uniformly sampled record of a run.

    ``data`` holds the CSV columns followed by the extra diagnostics; use
    :meth:`col` and :meth:`block` to address them by name.
    """

    data: np.ndarray
    n: int
    m: int
    p: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "_index", {name: i for i, name in enumerate(self.names)})

    @property
    def csv_names(self):
        return csv_columns(self.n, self.m, self.p)

    @property
    def names(self):
        if self.data.shape[1] == len(self.csv_names):
            return self.csv_names
        return self.csv_names + extra_columns(self.n, self.m, self.p)

    @property
    def csv_data(self):
        return self.data[:, : len(self.csv_names)]

    def __len__(self):
        return self.data.shape[0]

    @property
    def t(self):
        return self.data[:, 0]

    def col(self, name):
        return self.data[:, self._index[name]]

    def block(self, prefix):
        """Columns ``prefix1..k`` (vectors) or ``prefix_i_j`` (matrices), stacked."""
        names = [nm for nm in self.names if _belongs(nm, prefix)]
        if not names:
            raise KeyError(prefix)
        return self.data[:, [self._index[nm] for nm in names]]

    def matrix(self, prefix, rows, cols):
        return self.block(prefix).reshape(-1, rows, cols)

    def has(self, name):
        return name in self._index


def _belongs(name, prefix):
    if not name.startswith(prefix):
        return False
    rest = name[len(prefix) :]
    if rest.isdigit():
        return True
    parts = rest.split("_")
    return len(parts) == 3 and parts[0] == "" and parts[1].isdigit() and parts[2].isdigit()


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


@njit
def closed_loop_rhs(
    t, s, ds, rec, n, m, p,
    A, B, A_ref, B_ref, K_x, K_r, BtP, B_dag, e0,
    psi_kind, psi_par, th_base, th_amp, th_freq, zc_base, zc_amp, zc_freq,
    est, fpar, thr,
):
    """Fill ``ds`` with the augmented derivative; also fill ``rec`` when it is non-empty.

    ``fpar = [k0, l, eps, eps_bar, gamma0, gamma1, kappa, gradient_gain, lambda_f, drem_gamma]``.
    Returns the Jacobi sweep count (-1 on non-convergence, 0 when skipped).
    """
    k0 = fpar[0]
    l = fpar[1]
    eps = fpar[2]
    eps_bar = fpar[3]
    gamma0 = fpar[4]
    gamma1 = fpar[5]
    kappa = fpar[6]
    o = 0
    x = s[o : o + n]
    o += n
    xr = s[o : o + n]
    o += n
    psib = s[o : o + p]
    o += p
    eb = s[o : o + n]
    o += n
    vb = s[o : o + m]
    o += m
    phi = s[o : o + p * p].reshape((p, p))
    o_phi = o
    o += p * p
    y = s[o : o + p * m].reshape((p, m))
    o_y = o
    o += p * m
    d = s[o : o + p * m].reshape((p, m))
    o_d = o
    o += p * m
    th = s[o : o + p * m].reshape((p, m))
    o_th = o
    o += p * m
    G = s[o : o + p * p].reshape((p, p))
    o_G = o

    psi = np.empty(p)
    eval_regressor(psi_kind, psi_par, x, t, psi)
    theta_flat = np.empty(p * m)
    eval_schedule(th_base, th_amp, th_freq, t, theta_flat)
    theta = theta_flat.reshape((p, m))
    zc = np.empty(m)
    eval_schedule(zc_base, zc_amp, zc_freq, t, zc)

    u, u_bl, u_ad, u_nd = control_kernel(K_x, K_r, BtP, kappa, x, xr, zc, th, psi)
    dx = plant_kernel(A, B, x, u, theta, psi)
    dxr = A_ref @ xr + B_ref @ zc
    e = x - xr
    phib, z, norm = parametrization_kernel(B_dag, A_ref, l, e, eb, vb, psib)
    decay = -(B_dag @ e0) * (math.exp(-l * t) / norm)

    o = 0
    for i in range(n):
        ds[o + i] = dx[i]
        ds[o + n + i] = dxr[i]
    o = 2 * n
    for i in range(p):
        ds[o + i] = -l * psib[i] + psi[i]
    o += p
    for i in range(n):
        ds[o + i] = -l * eb[i] + e[i]
    o += n
    for j in range(m):
        ds[o + j] = -l * vb[j] + u_ad[j] + u_nd[j]
    for i in range(p):
        for j in range(p):
            ds[o_phi + i * p + j] = -k0 * phi[i, j] + phib[i] * phib[j]
        for j in range(m):
            ds[o_y + i * m + j] = -k0 * y[i, j] + phib[i] * z[j]
            ds[o_d + i * m + j] = -k0 * d[i, j] + phib[i] * decay[j]

    recording = rec.size > 0
    sweeps = 0
    omega = 0.0
    all_clipped = True
    lam = np.zeros(p)
    V = np.eye(p)
    Ups = np.zeros((p, m))
    eps_term = np.zeros((p, m))
    if est == GDREM or est == DREM or recording:
        lam, V, lam_bar, all_clipped, adj, omega, Ups, eps_term, sweeps = regularize_mix_kernel(phi, y, d, eps, eps_bar)

    if est == GDREM:
        dth = gdrem_law_kernel(th, omega, Ups, thr, gamma0, gamma1)
    elif est == GRADIENT:
        dth = gradient_law_kernel(th, phib, z, fpar[7] * np.eye(p))
    elif est == RLS:
        dth = gradient_law_kernel(th, phib, z, np.ascontiguousarray(G))
    else:
        adj_raw, det_raw = spectral_adj_det(V, lam)
        dth = drem_law_kernel(th, np.ascontiguousarray(phi), np.ascontiguousarray(y), adj_raw, fpar[9])
    for i in range(p):
        for j in range(m):
            ds[o_th + i * m + j] = dth[i, j]
    if est == RLS:
        dG = rls_gain_kernel(np.ascontiguousarray(G), phib, fpar[8])
        for i in range(p):
            for j in range(p):
                ds[o_G + i * p + j] = dG[i, j]
    else:
        for i in range(p * p):
            ds[o_G + i] = 0.0

    if recording:
        Theta = project_out_nullspace(theta, lam, V, eps_bar)
        k = 0
        rec[k] = t
        k += 1
        for i in range(n):
            rec[k] = x[i]
            k += 1
        for i in range(n):
            rec[k] = xr[i]
            k += 1
        for i in range(n):
            rec[k] = e[i]
            k += 1
        for arr in (u, u_bl, u_ad, u_nd):
            for j in range(m):
                rec[k] = arr[j]
                k += 1
        for i in range(p):
            rec[k] = phib[i]
            k += 1
        for j in range(m):
            rec[k] = z[j]
            k += 1
        rec[k] = omega
        k += 1
        rank = 0
        for i in range(p):
            rec[k] = lam[i]
            k += 1
            if lam[i] >= eps_bar:
                rank += 1
        rec[k] = rank
        k += 1
        for i in range(p):
            for j in range(m):
                rec[k] = th[i, j]
                k += 1
        for i in range(p):
            for j in range(m):
                rec[k] = Theta[i, j]
                k += 1
        e1 = 0.0
        e2 = 0.0
        e3 = 0.0
        for i in range(p):
            for j in range(m):
                e1 += (th[i, j] - Theta[i, j]) ** 2
                e2 += (th[i, j] - theta[i, j]) ** 2
                e3 += eps_term[i, j] ** 2
        rec[k] = math.sqrt(e1)
        rec[k + 1] = math.sqrt(e2)
        rec[k + 2] = math.sqrt(e3)
        k += 3
        # extras
        for i in range(p):
            rec[k] = psi[i]
            k += 1
        for i in range(p):
            for j in range(m):
                rec[k] = theta[i, j]
                k += 1
        for j in range(m):
            acc = 0.0
            for i in range(p):
                acc += theta[i, j] * psi[i]
            rec[k] = acc
            k += 1
        for i in range(p):
            for j in range(p):
                acc = 0.0
                for q in range(p):
                    if lam[q] < eps_bar:
                        acc += V[i, q] * V[j, q]
                rec[k] = acc
                k += 1
        for j in range(m):
            acc = z[j]
            for i in range(p):
                acc -= theta[i, j] * phib[i]
            rec[k] = acc
            k += 1
        if est == GDREM:
            rec[k] = gdrem_rate(omega, thr, gamma0, gamma1) * omega
        else:
            rec[k] = np.nan
        rec[k + 1] = 1.0 if all_clipped else 0.0
        rec[k + 2] = sweeps
    return sweeps


@njit
def simulate_kernel(
    s0, t0, dt, n_steps, record_every, n_cols, n, m, p,
    A, B, A_ref, B_ref, K_x, K_r, BtP, B_dag, e0,
    psi_kind, psi_par, th_base, th_amp, th_freq, zc_base, zc_amp, zc_freq,
    est, fpar, thr,
):
    """RK4 over ``n_steps``; returns ``(records, final_state, status, fail_step, fail_index)``."""
    n_rec = n_steps // record_every + 1
    records = np.empty((n_rec, n_cols))
    s = s0.copy()
    N = s.size
    k1 = np.empty(N)
    k2 = np.empty(N)
    k3 = np.empty(N)
    k4 = np.empty(N)
    tmp = np.empty(N)
    norec = np.empty(0)
    row = 0
    h = dt
    for i in range(n_steps + 1):
        t = t0 + i * dt
        if i % record_every == 0:
            sw = closed_loop_rhs(t, s, k1, records[row], n, m, p, A, B, A_ref, B_ref, K_x, K_r, BtP, B_dag, e0,
                                 psi_kind, psi_par, th_base, th_amp, th_freq, zc_base, zc_amp, zc_freq, est, fpar, thr)
            row += 1
        else:
            sw = closed_loop_rhs(t, s, k1, norec, n, m, p, A, B, A_ref, B_ref, K_x, K_r, BtP, B_dag, e0,
                                 psi_kind, psi_par, th_base, th_amp, th_freq, zc_base, zc_amp, zc_freq, est, fpar, thr)
        if sw < 0:
            return records[:row], s, STATUS_EIG, i, -1
        if i == n_steps:
            break
        for j in range(N):
            tmp[j] = s[j] + 0.5 * h * k1[j]
        sw = closed_loop_rhs(t + 0.5 * h, tmp, k2, norec, n, m, p, A, B, A_ref, B_ref, K_x, K_r, BtP, B_dag, e0,
                             psi_kind, psi_par, th_base, th_amp, th_freq, zc_base, zc_amp, zc_freq, est, fpar, thr)
        for j in range(N):
            tmp[j] = s[j] + 0.5 * h * k2[j]
        sw2 = closed_loop_rhs(t + 0.5 * h, tmp, k3, norec, n, m, p, A, B, A_ref, B_ref, K_x, K_r, BtP, B_dag, e0,
                              psi_kind, psi_par, th_base, th_amp, th_freq, zc_base, zc_amp, zc_freq, est, fpar, thr)
        for j in range(N):
            tmp[j] = s[j] + h * k3[j]
        sw3 = closed_loop_rhs(t + h, tmp, k4, norec, n, m, p, A, B, A_ref, B_ref, K_x, K_r, BtP, B_dag, e0,
                              psi_kind, psi_par, th_base, th_amp, th_freq, zc_base, zc_amp, zc_freq, est, fpar, thr)
        if sw < 0 or sw2 < 0 or sw3 < 0:
            return records[:row], s, STATUS_EIG, i, -1
        for j in range(N):
            s[j] = s[j] + (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            if not np.isfinite(s[j]):
                return records[:row], s, STATUS_NONFINITE, i + 1, j
    return records[:row], s, STATUS_OK, n_steps, -1


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def rk4_step(f, t, y, dt, names=None):
    """One classical Runge-Kutta step of ``dy/dt = f(t, y)``.

    Raises :class:`IntegrationError` naming the first non-finite component.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    y = np.asarray(y, dtype=np.float64)

    def checked(k, stage):
        k = np.asarray(k, dtype=np.float64)
        bad = np.flatnonzero(~np.isfinite(k))
        if bad.size:
            idx = int(bad[0])
            comp = names[idx] if names is not None else f"[{idx}]"
            raise IntegrationError(f"non-finite derivative in component {comp} at stage {stage}, t = {t}", t, comp)
        return k

    k1 = checked(f(t, y), 1)
    k2 = checked(f(t + 0.5 * dt, y + 0.5 * dt * k1), 2)
    k3 = checked(f(t + 0.5 * dt, y + 0.5 * dt * k2), 3)
    k4 = checked(f(t + dt, y + dt * k3), 4)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def initial_state(cfg):
    sys = cfg.system
    n, m, p = sys.n, sys.m, sys.p
    s = np.zeros(state_size(n, m, p))
    s[:n] = sys.x0
    s[n : 2 * n] = sys.x0ref
    o_th = 3 * n + p + m + p * p + 2 * p * m
    if cfg.estimator.theta0 is not None:
        s[o_th : o_th + p * m] = np.asarray(cfg.estimator.theta0, dtype=np.float64).reshape(-1)
    if cfg.estimator.kind == "rls":
        s[o_th + p * m :] = (cfg.estimator.rls_gamma0 * np.eye(p)).reshape(-1)
    return s


def kernel_args(cfg):
    """Positional model arguments shared by :func:`closed_loop_rhs` and :func:`simulate_kernel`."""
    sys = cfg.system
    n, m, p = sys.n, sys.m, sys.p
    c = np.ascontiguousarray
    g, e = cfg.gdrem, cfg.estimator
    fpar = np.array(
        [g.k0, cfg.l, g.epsilon, g.epsilon_bar, e.gamma0, e.gamma1, sys.kappa, e.gradient_gain, e.lambda_f, e.drem_gamma],
        dtype=np.float64,
    )
    return (
        n, m, p,
        c(sys.A, dtype=np.float64), c(sys.B, dtype=np.float64), c(sys.A_ref, dtype=np.float64),
        c(sys.B_ref, dtype=np.float64), c(sys.K_x, dtype=np.float64), c(sys.K_r, dtype=np.float64),
        c(sys.B.T @ sys.P), c(sys.B_dag), c(sys.x0 - sys.x0ref, dtype=np.float64),
        sys.psi.code, c(sys.psi.params), c(sys.theta.base.ravel()), c(sys.theta.amp.ravel()),
        c(sys.theta.freq.ravel()), c(sys.z_cmd.base.ravel()), c(sys.z_cmd.amp.ravel()), c(sys.z_cmd.freq.ravel()),
        e.code, fpar, g.gain_threshold(p),
    )


def make_rhs(cfg, with_record=False):
    """``f(t, s)`` for the augmented closed loop, usable with :func:`rk4_step`."""
    args = kernel_args(cfg)
    n, m, p = args[:3]
    width = len(csv_columns(n, m, p)) + len(extra_columns(n, m, p))

    def f(t, s):
        ds = np.empty_like(s)
        rec = np.empty(width) if with_record else np.empty(0)
        closed_loop_rhs(float(t), np.ascontiguousarray(s, dtype=np.float64), ds, rec, *args)
        return (ds, rec) if with_record else ds

    return f


def run_scenario(cfg, t0=0.0):
    """Integrate the closed loop and return the sampled :class:`Trace`."""
    cfg.validate()
    sys = cfg.system
    n, m, p = sys.n, sys.m, sys.p
    n_cols = len(csv_columns(n, m, p)) + len(extra_columns(n, m, p))
    args = kernel_args(cfg)
    s0 = initial_state(cfg)
    records, s_final, status, step, idx = simulate_kernel(
        s0, float(t0), float(cfg.dt), cfg.n_steps, int(cfg.record_every), n_cols, *args
    )
    if status != STATUS_OK:
        t_fail = t0 + step * cfg.dt
        if status == STATUS_EIG:
            raise IntegrationError(f"eigensolver failed to converge at t = {t_fail:.6g}", t_fail, "phi")
        comp = state_names(n, m, p)[idx]
        raise IntegrationError(f"non-finite state component {comp} at t = {t_fail:.6g}", t_fail, comp)
    meta = {
        "label": cfg.label,
        "case_id": cfg.case_id,
        "estimator": cfg.estimator.kind,
        "dt": cfg.dt,
        "t_final": cfg.t_final,
        "record_every": cfg.record_every,
        "gain_threshold": cfg.gdrem.gain_threshold(p),
        "gamma0": cfg.estimator.gamma0,
        "epsilon_bar": cfg.gdrem.epsilon_bar,
        "final_state": s_final,
    }
    return Trace(data=records, n=n, m=m, p=p, meta=meta)
