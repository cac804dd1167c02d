import numpy as np
import pytest

from lattice_laws import al, flow, toda
from lattice_laws.errors import StepUnderflow
from lattice_laws.window import LatticeWindow

W = LatticeWindow(0, 6)


def toda_state():
    rng = np.random.default_rng(5)
    return toda.TodaState(W, 0.5 * np.exp(0.02 * rng.standard_normal(6)), 0.02 * rng.standard_normal(6))


def al_state(sign=1):
    rng = np.random.default_rng(6)
    return al.ALState(W, 0.03 * (rng.standard_normal(6) + 1j * rng.standard_normal(6)), sign)


def test_vacuum_is_stationary():
    traj = flow.integrate(toda.TodaState.vacuum(W), T=0.5)
    for s in traj.states:
        assert np.all(s.a == 0.5) and not np.any(s.b)
    traj = flow.integrate(al.ALState.vacuum(W), T=0.5)
    assert all(not np.any(s.alpha) for s in traj.states)


def test_snapshot_times():
    traj = flow.integrate(toda_state(), T=1.0, times=[0.25, 0.5])
    np.testing.assert_array_equal(traj.times, [0.0, 0.25, 0.5, 1.0])
    assert len({s.window for s in traj.states}) == 1
    assert traj.step_stats["steps"] > 0


def test_hermite_snapshot_matches_direct_run():
    s = toda_state()
    mid = flow.integrate(s, T=1.0, times=[0.37], tol=1e-11).states[1]
    direct = flow.integrate(s, T=0.37, tol=1e-11).states[-1]
    w = direct.window.union(mid.window)
    assert np.max(np.abs(mid.on(w).b - direct.on(w).b)) < 1e-8


def test_toda_energy_drift():
    traj = flow.integrate(toda_state(), T=1.0, times=np.linspace(0, 1, 5))
    d = flow.conservation_monitor(traj, 1.0, ["H", "M", "P"])
    assert max(d.drifts.values()) < 1e-8
    assert not d.out_of_ball


def test_al_mass_drift_both_signs():
    for sign in (1, -1):
        traj = flow.integrate(al_state(sign), T=1.0, times=np.linspace(0, 1, 5))
        d = flow.conservation_monitor(traj, 2.0, ["M", "H", "P"], sign=sign)
        assert "P" not in d.drifts
        assert d.drifts["M"] < 1e-8 and d.drifts["H"] < 1e-8


def test_spectral_drifts_small():
    traj = flow.integrate(al_state(), T=0.5, times=[0.25])
    d = flow.conservation_monitor(traj, 2.0, ["sum_rho", "sum_gamma", "log_det"])
    assert max(d.drifts.values()) < 1e-8


def test_window_grows_with_support():
    s = toda.TodaState(LatticeWindow(0, 1), [0.5], [0.3])
    traj = flow.integrate(s, T=3.0, margin=4, growth=8)
    assert traj.window.size > 1 + 2 * 4
    last = traj.states[-1]
    assert abs(last.b[0]) < 1e-13 and abs(last.b[-1]) < 1e-13


def test_rk4_fixed_step_order():
    s = toda_state()
    model = flow._Model(s, None)
    w = s.window.expand(16)
    y0 = model.pack(s.on(w))

    def run(n):
        y, h = y0, 0.5 / n
        for _ in range(n):
            y = flow._rk4(model, y, model.rhs(y, w), h, w)
        return y

    ref = run(256)
    e1 = np.max(np.abs(run(8) - ref))
    e2 = np.max(np.abs(run(16) - ref))
    assert 12 < e1 / e2 < 20


def test_step_underflow():
    def blowup(s):
        n = s.window.expand(1).sites
        b = s.b_at(n)
        return np.zeros(len(n)), 1e3 * b ** 2

    s = toda.TodaState(LatticeWindow(0, 1), [0.5], [1.0])
    with pytest.raises(StepUnderflow):
        flow.integrate(s, blowup, T=1.0)


def test_argument_validation():
    s = toda_state()
    with pytest.raises(ValueError):
        flow.integrate(s, T=0.0)
    with pytest.raises(ValueError):
        flow.integrate(s, tol=1e-3)
    with pytest.raises(ValueError):
        flow.integrate(s, T=1.0, times=[2.0])
    with pytest.raises(ValueError):
        flow.conservation_monitor(flow.integrate(s, T=0.1), 1.0, ["bogus"])


def test_toda_bump_rho_drift_long_run():
    n = np.arange(-4, 5)
    s = toda.TodaState(LatticeWindow(-4, 9), 0.5 * np.exp(0.02 * np.exp(-n ** 2 / 4.0)),
                       0.03 * np.exp(-(n - 1) ** 2 / 2.0) - 0.03 * np.exp(-(n + 2) ** 2 / 2.0))
    assert toda.in_ball(s, 2.0)
    traj = flow.integrate(s, T=2.0, times=np.linspace(0, 2, 9))
    d = flow.conservation_monitor(traj, 2.0, ["sum_rho"], sign=1)
    assert d.drifts["sum_rho"] < 1e-7


def test_al_breather_gamma_drift_long_run():
    n = np.arange(-4, 5)
    alpha = 0.04 / np.cosh(0.7 * n) * np.exp(0.6j * n)
    s = al.ALState(LatticeWindow(-4, 9), alpha, -1)
    assert al.in_ball_al(s, 2.0)
    traj = flow.integrate(s, T=2.0, times=np.linspace(0, 2, 9))
    d = flow.conservation_monitor(traj, 2.0, ["sum_gamma"])
    assert d.drifts["sum_gamma"] < 1e-7
