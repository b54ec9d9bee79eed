import math

import numpy as np
import pytest

from gdrem_mrac.errors import ConfigError, IntegrationError
from gdrem_mrac.mrac import Schedule
from gdrem_mrac.sim import (
    build_case,
    build_unexcited_case,
    csv_columns,
    initial_state,
    make_rhs,
    rk4_step,
    run_scenario,
    state_names,
    state_size,
)


def test_rk4_exponential():
    y = np.array([1.0])
    dt = 1e-2
    for k in range(100):
        y = rk4_step(lambda t, s: -s, k * dt, y, dt)
    assert y[0] == pytest.approx(math.exp(-1.0), abs=1e-10)


def test_rk4_fourth_order():
    # y' = y cos t, y(0) = 1 -> exp(sin t)
    def err(dt):
        y = np.array([1.0])
        n = int(round(2.0 / dt))
        for k in range(n):
            y = rk4_step(lambda t, s: s * math.cos(t), k * dt, y, dt)
        return abs(y[0] - math.exp(math.sin(2.0)))

    dts = np.array([0.1, 0.05, 0.025, 0.0125])
    order = np.polyfit(np.log(dts), np.log([err(h) for h in dts]), 1)[0]
    assert 3.7 <= order <= 4.3


def test_rk4_reports_component():
    def f(t, s):
        out = -s.copy()
        if t > 0.0:
            out[1] = np.nan
        return out

    with pytest.raises(IntegrationError) as exc:
        rk4_step(f, 0.0, np.ones(3), 0.1, names=["a", "b", "c"])
    assert exc.value.component == "b"
    with pytest.raises(ValueError):
        rk4_step(f, 0.0, np.ones(3), 0.0)


def test_state_layout():
    assert state_size(2, 1, 2) == len(state_names(2, 1, 2)) == 23
    assert state_size(2, 1, 5) == len(state_names(2, 1, 5))
    s0 = initial_state(build_case(1))
    assert s0.size == 23
    assert np.array_equal(s0[:4], [-1.0, 0.0, -1.0, 0.0])
    assert not np.any(s0[4:])


def test_rls_initial_covariance():
    cfg = build_case(1).with_overrides(kind="rls")
    s0 = initial_state(cfg)
    assert np.allclose(s0[-4:], (100.0 * np.eye(2)).ravel())


def test_first_record():
    tr = run_scenario(build_case(1).with_overrides(t_final=0.01, record_every=1))
    assert tr.t[0] == 0.0
    assert tr.col("x1")[0] == -1.0
    assert np.allclose(np.diff(tr.t), 1e-4)
    assert len(tr) == 101
    assert tr.csv_names == csv_columns(2, 1, 2)


def test_known_parameters_track_exactly():
    # theta = 0 and thetahat(0) = 0: plant and reference coincide
    cfg = build_case(1)
    cfg = cfg.with_overrides(theta=Schedule(np.zeros((2, 1))), t_final=1.0)
    tr = run_scenario(cfg)
    assert np.max(np.abs(tr.block("eref"))) <= 1e-12
    assert np.max(np.abs(tr.block("thetahat"))) <= 1e-12


def test_rhs_matches_trace():
    cfg = build_case(1).with_overrides(t_final=0.02, record_every=1)
    tr = run_scenario(cfg)
    f = make_rhs(cfg)
    s = initial_state(cfg)
    for k in range(int(round(0.02 / 1e-4))):
        s = rk4_step(f, k * 1e-4, s, 1e-4)
    assert np.allclose(s, tr.meta["final_state"], rtol=0, atol=1e-14)


def test_deterministic():
    cfg = build_case(2).with_overrides(t_final=0.5)
    a, b = run_scenario(cfg), run_scenario(cfg)
    assert np.array_equal(a.data, b.data, equal_nan=True)


def test_reference_model_solution():
    # reference model has the closed form given by its matrix exponential
    scipy_linalg = pytest.importorskip("scipy.linalg")
    cfg = build_case(1).with_overrides(t_final=2.0)
    tr = run_scenario(cfg)
    sys = cfg.system
    xr_inf = -np.linalg.solve(sys.A_ref, sys.B_ref @ [1.0])
    t = 2.0
    want = xr_inf + scipy_linalg.expm(sys.A_ref * t) @ (sys.x0ref - xr_inf)
    assert np.allclose(tr.block("xref")[-1], want, atol=1e-12)


def test_config_errors():
    cfg = build_case(1)
    with pytest.raises(ConfigError):
        cfg.with_overrides(gamma0=0.4).validate()
    with pytest.raises(ConfigError):
        cfg.with_overrides(dt=0.0).validate()
    with pytest.raises(ConfigError):
        cfg.with_overrides(record_every=0).validate()
    with pytest.raises(ConfigError):
        cfg.with_overrides(theta0=np.zeros(3)).validate()
    with pytest.raises(ConfigError):
        build_case(4)


def test_divergence_names_component():
    cfg = build_case(1).with_overrides(kind="gradient", gradient_gain=1e300, t_final=1.0)
    with pytest.raises(IntegrationError) as exc:
        run_scenario(cfg)
    assert exc.value.component in state_names(2, 1, 2) or exc.value.component == "phi"


def test_unexcited_case_keeps_estimate_bounded():
    tr = run_scenario(build_unexcited_case(t_final=5.0))
    assert np.all(np.isfinite(tr.data[:, : len(tr.csv_names)]))
    assert tr.col("omega")[-1] < 1e-12
    e = np.linalg.norm(tr.block("eref"), axis=1)
    assert e.max() < 0.1
    assert e[-1] < 1e-3


@pytest.mark.parametrize("kind", ["gradient", "rls", "drem"])
def test_baselines_run(kind):
    tr = run_scenario(build_case(1).with_overrides(kind=kind, t_final=0.5))
    assert np.all(np.isfinite(tr.block("thetahat")))
    assert tr.meta["estimator"] == kind
