import dataclasses

import numpy as np
import pytest

from porohyst import config
from porohyst import constitutive as cst
from porohyst import hysteresis as hy
from porohyst.solver import (
    InitialData, Simulation, SolverConfig, SolverError, continuation_sequences, floor_curve,
)

from conftest import run_preset


def test_zero_data_stays_zero():
    sim, res = run_preset("zero")
    s = res.state
    assert not np.any(s.u) and not np.any(s.w) and not np.any(s.p)
    np.testing.assert_array_equal(sim.forms.scalar(s.theta), 1.0)
    assert res.summary()["residual_max"] == 0.0
    assert all(r.residual == 0.0 for r in res.rows)


def test_audit_with_active_hysteresis_and_plasticity():
    # nonzero initial pressure and memory, small yield radius, viscous regulariser on
    sim, res = run_preset(
        "smooth_1d", solver__t_end=0.1, solver__delta=0.05, material__sigma_y=0.01,
        initial__p0="cosine:0.5", initial__memory="ramp:0.6",
    )
    s = res.summary()
    assert s["dq_plastic_total"] > 0 and s["dq_preisach_total"] > 0
    assert s["dq_min"] >= 0
    assert s["residual_max"] <= 1e-8
    assert s["floor_violations"] == 0


def test_audit_2d_with_pressure_data():
    sim, res = run_preset("smooth_2d", solver__nx=4, solver__ny=4, solver__t_end=0.05,
                          material__sigma_y=0.01, initial__p0="sine:0.4")
    s = res.summary()
    assert s["residual_max"] <= 1e-8
    assert s["dq_plastic_total"] > 0


def test_single_outer_pass_reports_splitting_defect():
    sim, res = run_preset("smooth_1d", solver__t_end=0.02, solver__outer_max=1)
    split = res.log.column("splitting")[1:]
    assert np.any(split != 0.0)
    assert np.all(res.log.column("outer_passes")[1:] == 1)


def test_initial_data_checks():
    cfg = config.from_preset("smooth_1d", solver__t_end=0.01)
    sim = Simulation(cfg.params, cfg.solver)
    with pytest.raises(cst.HypothesisViolation, match="initial-pressure"):
        sim.init_state(InitialData(p0=lambda x: np.full(x.shape[0], 2.0)))
    with pytest.raises(cst.HypothesisViolation, match="initial-temperature"):
        sim.init_state(InitialData(theta0=lambda x: np.full(x.shape[0], 0.5)))
    st = sim.init_state(InitialData(theta0=lambda x: np.full(x.shape[0], 1.5)))
    np.testing.assert_allclose(sim.forms.scalar(st.theta), 1.5)


@pytest.mark.parametrize("change,exc", [
    ({"R": 0.5}, cst.HypothesisViolation),
    ({"mode": "fv"}, ValueError),
    ({"dt": 0.0}, ValueError),
    ({"t_end": 0.0105}, ValueError),
    ({"delta_seq": (0.1, 0.5)}, ValueError),
    ({"R_seq": (20.0, 10.0)}, ValueError),
    ({"outer_max": 0}, ValueError),
])
def test_config_validation(change, exc):
    cfg = dataclasses.replace(SolverConfig(t_end=0.01), **change)
    with pytest.raises(exc):
        cfg.validate(cst.MaterialParams())


def test_continuation_sequences():
    c = SolverConfig(delta_seq=(1.0, 0.5, 0.25))
    assert continuation_sequences(c) == [(1.0, 10.0), (0.5, 10.0), (0.25, 10.0)]
    c = SolverConfig(delta_seq=(1.0, 0.5), R_seq=(10.0, 20.0))
    assert continuation_sequences(c) == [(1.0, 10.0), (0.5, 20.0)]
    with pytest.raises(ValueError):
        continuation_sequences(SolverConfig(delta_seq=(1.0, 0.5), R_seq=(10.0, 20.0, 30.0)))
    assert continuation_sequences(SolverConfig()) == [(0.0, 10.0)]


def test_floor_curve():
    assert floor_curve(0.0, 3.0, 1.0, 2.0) == pytest.approx(2.0)
    t = np.linspace(0, 5, 5001)
    v = floor_curve(t, 3.0, 2.0, 1.0)
    # solves c0 v' = -C v^2
    np.testing.assert_allclose(np.gradient(v, t, edge_order=2) * 2.0, -3.0 * v * v, rtol=1e-5)


def test_nonfinite_fields_raise_with_step(monkeypatch):
    cfg = config.from_preset("smooth_1d", solver__t_end=0.01)
    sim = Simulation(cfg.params, cfg.solver)
    state = sim.init_state(cfg.initial_data())
    state, _ = sim.advance(state)
    monkeypatch.setattr(sim, "step_temperature", lambda *a, **k: np.full(sim.forms.ns, np.nan))
    with pytest.raises(SolverError) as info:
        sim.advance(state)
    assert info.value.step == 2


def test_heat_sources_are_nonnegative_in_a_run(short_1d):
    sim, res = short_1d
    assert res.summary()["dq_min"] >= 0.0
    assert res.summary()["kr_max"] == 0.0


def test_custom_density_is_used():
    cfg = config.from_preset("smooth_1d", solver__t_end=0.01, initial__p0="const:0.3")
    dens = hy.BoxDensity(2.0, 1.0, 1.0)
    a = Simulation(cfg.params, cfg.solver).init_state(cfg.initial_data())
    b = Simulation(cfg.params, cfg.solver, density=dens).init_state(cfg.initial_data())
    np.testing.assert_allclose(b.preisach.G0, 4.0 * a.preisach.G0)
