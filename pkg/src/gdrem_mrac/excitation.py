"""Offline excitation analysis of sampled regressor traces.

A window Gram matrix ``int_t^{t+T} phibar phibar^T`` is evaluated with the
trapezoid rule on the trace grid.  Windows are classified as fully exciting
(every eigenvalue above the level) or partially exciting with rank ``r``.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import sym_eig
from .mrac import PSI_HARMONIC, PSI_SWITCHED

VERDICT_PE, VERDICT_SPE, VERDICT_NONE = "PE", "s-PE", "none"
DEFAULT_WINDOW = 1.0


@dataclass(frozen=True)
class WindowRecord:
    start: float
    eigenvalues: np.ndarray
    rank: int
    verdict: str


@dataclass(frozen=True)
class ExcitationReport:
    window_T: float
    level_threshold: float
    windows: list
    verdict: str
    alpha_bounds: tuple
    kT_estimate: float = None
    rank_profile: list = field(default_factory=list)

    @property
    def starts(self):
        return np.array([w.start for w in self.windows])

    @property
    def ranks(self):
        return np.array([w.rank for w in self.windows], dtype=int)

    def to_text(self):
        lines = [
            f"window_T: {self.window_T:.17g}",
            f"level_threshold: {self.level_threshold:.17g}",
            f"verdict: {self.verdict}",
            f"alpha_lower: {self.alpha_bounds[0]:.17g}",
            f"alpha_upper: {self.alpha_bounds[1]:.17g}",
            "kT_estimate: " + ("none" if self.kT_estimate is None else f"{self.kT_estimate:.17g}"),
            "rank_profile:",
        ]
        lines += [f"  t >= {t0:.6g}: rank {r}" for t0, r in self.rank_profile]
        lines.append("windows: start rank verdict eigenvalues")
        for w in self.windows:
            eig = " ".join(f"{v:.6e}" for v in w.eigenvalues)
            lines.append(f"  {w.start:.6f} {w.rank} {w.verdict} {eig}")
        return "\n".join(lines) + "\n"


def _uniform_step(t):
    t = np.asarray(t, dtype=np.float64)
    if t.size < 2:
        raise IndexError("trace needs at least two samples")
    h = np.diff(t)
    if not np.allclose(h, h[0], rtol=1e-6, atol=1e-12):
        raise ValueError("trace must be uniformly sampled")
    return float(h[0])


def _window_slice(t, t_start, T):
    h = _uniform_step(t)
    i0 = int(round((t_start - t[0]) / h))
    n = int(round(T / h))
    if i0 < 0 or n < 1 or i0 + n > t.size - 1:
        raise IndexError(f"window [{t_start}, {t_start + T}] exceeds trace [{t[0]}, {t[-1]}]")
    return i0, n, h


def window_gram(t, phibar, t_start, T):
    """Trapezoid approximation of ``int phibar phibar^T`` over ``[t_start, t_start + T]``."""
    t = np.asarray(t, dtype=np.float64)
    phibar = np.asarray(phibar, dtype=np.float64)
    if phibar.ndim == 1:
        phibar = phibar[:, None]
    i0, n, h = _window_slice(t, t_start, T)
    seg = phibar[i0 : i0 + n + 1]
    w = np.full(n + 1, h)
    w[0] = w[-1] = 0.5 * h
    G = (seg * w[:, None]).T @ seg
    return 0.5 * (G + G.T)


def window_grams(t, phibar, T, stride=None):
    """Gram matrices on consecutive windows; returns ``(starts, grams)``."""
    t = np.asarray(t, dtype=np.float64)
    phibar = np.asarray(phibar, dtype=np.float64)
    if phibar.ndim == 1:
        phibar = phibar[:, None]
    h = _uniform_step(t)
    n = int(round(T / h))
    if n < 1:
        raise ValueError("window shorter than the sampling step")
    step = n if stride is None else max(1, int(round(stride / h)))
    idx = np.arange(0, t.size - n, step)
    if idx.size == 0:
        raise IndexError("window longer than trace")
    # prefix sums of the trapezoid integrand make every window O(1)
    outer = np.einsum("ti,tj->tij", phibar, phibar)
    cum = np.concatenate([np.zeros((1,) + outer.shape[1:]), np.cumsum(0.5 * h * (outer[1:] + outer[:-1]), axis=0)])
    grams = cum[idx + n] - cum[idx]
    grams = 0.5 * (grams + np.transpose(grams, (0, 2, 1)))
    return t[idx], grams


def regressor_rank(decomposition, eps_bar):
    """Number of eigenvalues at or above ``eps_bar``."""
    return int(np.count_nonzero(np.asarray(decomposition.lambdas) >= eps_bar))


def detect_kT(t, omega, threshold, T):
    """First time ``omega`` exceeds ``threshold`` and stays above it for a full window ``T``."""
    t = np.asarray(t, dtype=np.float64)
    above = np.asarray(omega) > threshold
    h = _uniform_step(t)
    need = int(round(T / h)) + 1
    run = 0
    for i, ok in enumerate(above):
        run = run + 1 if ok else 0
        if run >= need:
            return float(t[i - need + 1])
    return None


def _profile(starts, ranks):
    prof = []
    for s, r in zip(starts, ranks):
        if not prof or prof[-1][1] != r:
            prof.append((float(s), int(r)))
    return prof


def classify_excitation(t, phibar, T, level_threshold, omega=None, gain_threshold=None, stride=None):
    """Classify the regressor trace on consecutive windows of length ``T``.

    ``omega``/``gain_threshold`` are optional; when both are given the report
    carries ``kT_estimate``.
    """
    t = np.asarray(t, dtype=np.float64)
    if t.size == 0:
        raise IndexError("empty trace")
    starts, grams = window_grams(t, phibar, T, stride)
    if starts.size < 2:
        raise IndexError("classification needs at least two windows")
    windows = []
    p = grams.shape[1]
    for s, G in zip(starts, grams):
        dec = sym_eig(G, level_threshold)
        r = dec.rank
        verdict = VERDICT_PE if r == p else (VERDICT_SPE if r >= 1 else VERDICT_NONE)
        windows.append(WindowRecord(float(s), dec.lambdas.copy(), r, verdict))
    ranks = np.array([w.rank for w in windows])
    if np.all(ranks == p):
        verdict = VERDICT_PE
    elif np.all(ranks >= 1):
        verdict = VERDICT_SPE
    else:
        verdict = VERDICT_NONE
    qual = [w.eigenvalues[k] for w in windows for k in range(w.rank)]
    alpha = (float(min(qual)), float(max(qual))) if qual else (0.0, 0.0)
    kT = None
    if omega is not None and gain_threshold is not None:
        kT = detect_kT(t, omega, gain_threshold, T)
    return ExcitationReport(
        window_T=float(T),
        level_threshold=float(level_threshold),
        windows=windows,
        verdict=verdict,
        alpha_bounds=alpha,
        kT_estimate=kT,
        rank_profile=_profile(starts, ranks),
    )


def default_window(system):
    """One period of the dominant excitation when the regressor is periodic."""
    psi = system.psi
    if psi.code in (PSI_SWITCHED, PSI_HARMONIC):
        w = psi.params[1] if psi.code == PSI_SWITCHED else psi.params[0]
        if w > 0:
            return 2.0 * math.pi / w
    return DEFAULT_WINDOW


def classify_trace(trace, T, level_threshold=None):
    """:func:`classify_excitation` on a :class:`Trace`, using its stored gain threshold."""
    if level_threshold is None:
        level_threshold = default_level(T)
    return classify_excitation(
        trace.t,
        trace.block("phibar"),
        T,
        level_threshold,
        omega=trace.col("omega"),
        gain_threshold=trace.meta.get("gain_threshold"),
    )


def default_level(T):
    """Gram level counted as excitation: ``1e-6 * T``."""
    return 1e-6 * T
