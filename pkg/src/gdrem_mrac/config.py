"""INI scenario files.

Sections and keys (all optional when ``[sim] case`` names a built-in case)::

    [system]     n m p A B A_ref B_ref Q kappa x0 x0ref
                 theta theta_amp theta_freq regressor regressor_params
                 z_cmd z_cmd_amp z_cmd_freq
    [gdrem]      k0 epsilon epsilon_bar mu
    [estimator]  kind gamma0 gamma1 gradient_gain rls_gamma0 lambda_f drem_gamma theta0
    [sim]        case l dt t_final record_every name
    [output]     dir plots plot_format

Matrices are whitespace- or comma-separated numbers in row-major order; their
sizes must agree with ``n``, ``m`` and ``p``.
"""
import configparser
import re
from dataclasses import replace

import numpy as np

from .errors import ConfigError
from .estimators import ESTIMATORS, EstimatorConfig
from .gdrem import GdremConfig
from .mrac import REGRESSORS, MracSystem, Regressor, Schedule, compute_gains
from .sim import ScenarioConfig, build_case

SCHEMA = {
    "system": {
        "n", "m", "p", "A", "B", "A_ref", "B_ref", "Q", "kappa", "x0", "x0ref",
        "theta", "theta_amp", "theta_freq", "regressor", "regressor_params",
        "z_cmd", "z_cmd_amp", "z_cmd_freq",
    },
    "gdrem": {"k0", "epsilon", "epsilon_bar", "mu"},
    "estimator": {"kind", "gamma0", "gamma1", "gradient_gain", "rls_gamma0", "lambda_f", "drem_gamma", "theta0"},
    "sim": {"case", "l", "dt", "t_final", "record_every", "name"},
    "output": {"dir", "plots", "plot_format"},
}


def _numbers(section, key, text):
    parts = [s for s in re.split(r"[,\s;\[\]]+", text.strip()) if s]
    try:
        return np.array([float(s) for s in parts], dtype=np.float64)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected numbers, got {text!r}") from None


def _scalar(section, key, text, kind=float):
    try:
        return kind(text.strip())
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected {kind.__name__}, got {text!r}") from None


def _matrix(sec, key, rows, cols, name="system"):
    vals = _numbers(name, key, sec[key])
    if vals.size != rows * cols:
        raise ConfigError(f"[{name}] {key}: expected {rows}x{cols} = {rows * cols} values, got {vals.size}")
    return vals.reshape(rows, cols)


def load_ini(path):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    for name in parser.sections():
        if name not in SCHEMA:
            raise ConfigError(f"unknown section [{name}]")
        unknown = set(parser[name]) - SCHEMA[name]
        if unknown:
            raise ConfigError(f"[{name}] unknown key(s): {', '.join(sorted(unknown))}")
    return parser


def _system_from(sec, base):
    """Build or override an :class:`MracSystem` from a ``[system]`` section."""
    if base is None:
        missing = {"n", "m", "p", "A", "B", "A_ref", "B_ref", "theta", "regressor"} - set(sec)
        if missing:
            raise ConfigError(f"[system] missing key(s): {', '.join(sorted(missing))}")
    n = _scalar("system", "n", sec["n"], int) if "n" in sec else base.n
    m = _scalar("system", "m", sec["m"], int) if "m" in sec else base.m
    p = _scalar("system", "p", sec["p"], int) if "p" in sec else base.p
    if min(n, m, p) < 1:
        raise ConfigError("[system] n, m, p must be positive")

    def mat(key, rows, cols, default):
        return _matrix(sec, key, rows, cols) if key in sec else default

    A = mat("A", n, n, None if base is None else base.A)
    B = mat("B", n, m, None if base is None else base.B)
    A_ref = mat("A_ref", n, n, None if base is None else base.A_ref)
    B_ref = mat("B_ref", n, m, None if base is None else base.B_ref)
    Q = mat("Q", n, n, np.eye(n) if base is None else base.Q)
    kappa = _scalar("system", "kappa", sec["kappa"]) if "kappa" in sec else (1.0 if base is None else base.kappa)
    x0 = mat("x0", 1, n, None if base is None else base.x0[None, :])
    x0 = np.zeros(n) if x0 is None else x0.reshape(n)
    x0ref = mat("x0ref", 1, n, None if base is None else base.x0ref[None, :])
    x0ref = x0.copy() if x0ref is None else x0ref.reshape(n)

    th_base = base.theta if base is not None else None
    if "theta" in sec or "theta_amp" in sec or "theta_freq" in sec:
        tb = mat("theta", p, m, None if th_base is None else th_base.base)
        ta = mat("theta_amp", p, m, np.zeros((p, m)) if th_base is None else th_base.amp)
        tf = mat("theta_freq", p, m, np.zeros((p, m)) if th_base is None else th_base.freq)
        theta = Schedule(tb, ta, tf)
    else:
        theta = th_base

    if "regressor" in sec or "regressor_params" in sec:
        kind = sec.get("regressor", base.psi.kind if base is not None else "").strip()
        if kind not in REGRESSORS:
            raise ConfigError(f"[system] regressor: unknown family {kind!r}; choose from {', '.join(REGRESSORS)}")
        params = _numbers("system", "regressor_params", sec.get("regressor_params", ""))
        try:
            psi = Regressor(kind, p, params)
        except ValueError as exc:
            raise ConfigError(f"[system] regressor_params: {exc}") from None
    else:
        psi = base.psi

    zc_base = base.z_cmd if base is not None else Schedule(np.ones(m))
    if "z_cmd" in sec or "z_cmd_amp" in sec or "z_cmd_freq" in sec:
        zb = mat("z_cmd", 1, m, zc_base.base[None, :]).reshape(m)
        za = mat("z_cmd_amp", 1, m, zc_base.amp[None, :]).reshape(m)
        zf = mat("z_cmd_freq", 1, m, zc_base.freq[None, :]).reshape(m)
        z_cmd = Schedule(zb, za, zf)
    else:
        z_cmd = zc_base

    try:
        K_x, K_r, P = compute_gains(A, B, A_ref, B_ref, Q)
    except ValueError as exc:
        raise ConfigError(f"[system] {exc}") from None
    return MracSystem(A, B, A_ref, B_ref, K_x, K_r, P, Q, kappa, theta, psi, z_cmd, x0, x0ref)


def _floats(sec, name, keys):
    return {k: _scalar(name, k, sec[k]) for k in keys if k in sec}


def scenario_from_parser(parser, case=None):
    """Apply a parsed file on top of the built-in case (if any)."""
    sim = parser["sim"] if parser.has_section("sim") else {}
    if case is None and "case" in sim:
        case = _scalar("sim", "case", sim["case"], int)
    cfg = build_case(case) if case is not None else None

    if parser.has_section("system") or cfg is None:
        if not parser.has_section("system"):
            raise ConfigError("no [system] section and no built-in case selected")
        system = _system_from(parser["system"], None if cfg is None else cfg.system)
    else:
        system = cfg.system

    gd = cfg.gdrem if cfg is not None else GdremConfig()
    if parser.has_section("gdrem"):
        try:
            gd = replace(gd, **_floats(parser["gdrem"], "gdrem", SCHEMA["gdrem"]))
        except ValueError as exc:
            raise ConfigError(f"[gdrem] {exc}") from None

    est = cfg.estimator if cfg is not None else EstimatorConfig()
    if parser.has_section("estimator"):
        sec = parser["estimator"]
        kw = _floats(sec, "estimator", SCHEMA["estimator"] - {"kind", "theta0"})
        if "kind" in sec:
            kw["kind"] = sec["kind"].strip()
            if kw["kind"] not in ESTIMATORS:
                raise ConfigError(f"[estimator] kind: unknown estimator {kw['kind']!r}; choose from {', '.join(ESTIMATORS)}")
        if "theta0" in sec:
            kw["theta0"] = _matrix(sec, "theta0", system.p, system.m, "estimator")
        try:
            est = replace(est, **kw)
        except ValueError as exc:
            raise ConfigError(f"[estimator] {exc}") from None

    top = {}
    for key in ("l", "dt", "t_final"):
        if key in sim:
            top[key] = _scalar("sim", key, sim[key])
    if "record_every" in sim:
        top["record_every"] = _scalar("sim", "record_every", sim["record_every"], int)
    if "name" in sim:
        top["name"] = sim["name"].strip()

    if cfg is None:
        cfg = ScenarioConfig(system=system, gdrem=gd, estimator=est, **top)
    else:
        cfg = replace(cfg, system=system, gdrem=gd, estimator=est, **top)
    return cfg.validate()


def output_options(parser):
    out = {"dir": None, "plots": False, "plot_format": "svg"}
    if parser is not None and parser.has_section("output"):
        sec = parser["output"]
        if "dir" in sec:
            out["dir"] = sec["dir"].strip()
        if "plots" in sec:
            try:
                out["plots"] = parser.getboolean("output", "plots")
            except ValueError:
                raise ConfigError(f"[output] plots: expected a boolean, got {sec['plots']!r}") from None
        if "plot_format" in sec:
            fmt = sec["plot_format"].strip().lower()
            if fmt not in ("svg", "pdf"):
                raise ConfigError("[output] plot_format: expected svg or pdf")
            out["plot_format"] = fmt
    return out


def parse_config(path=None, case=None, overrides=None):
    """Scenario from a file and/or built-in case, then keyword overrides (``dt``, ``t_final``...)."""
    if path is None and case is None:
        raise ConfigError("either a config file or a built-in case is required")
    if path is not None:
        cfg = scenario_from_parser(load_ini(path), case)
    else:
        cfg = build_case(case)
    if overrides:
        try:
            cfg = cfg.with_overrides(**{k: v for k, v in overrides.items() if v is not None})
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
    return cfg.validate()
