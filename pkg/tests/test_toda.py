import math
import warnings

import numpy as np
import pytest

from lattice_laws import toda
from lattice_laws.errors import DegenerateGreen, OutOfBall, OutOfBallWarning
from lattice_laws.window import LatticeWindow

from oracles import toda_gamma, toda_green, toda_rho_log_ratio

W1 = LatticeWindow(0, 1)


def single(a=0.5, b=0.0):
    return toda.TodaState(W1, [a], [b])


def random_state(seed, size=16, amp=0.01):
    rng = np.random.default_rng(seed)
    w = LatticeWindow(0, size)
    return toda.TodaState(w, 0.5 * np.exp(amp * rng.uniform(-1, 1, size)), amp * rng.uniform(-1, 1, size))


# -- Flaschka variables and vector field --

def test_flaschka_vacuum():
    w = LatticeWindow(0, 4)
    s = toda.flaschka_forward(toda.TodaPhase(w, np.zeros(4), np.zeros(4)))
    np.testing.assert_array_equal(s.a, 0.5)
    np.testing.assert_array_equal(s.b, 0.0)


def test_flaschka_values():
    w = LatticeWindow(0, 3)
    s = toda.flaschka_forward(toda.TodaPhase(w, np.array([0.0, 2 * math.log(2), 0.0]), np.array([3.0, 0, 0])))
    assert abs(s.a[0] - 0.25) < 1e-15
    assert s.b[0] == -1.5
    # q is held at its edge value past the window, so the last bond is relaxed
    assert s.a[-1] == 0.5


def test_vector_field_vacuum():
    da, db = toda.toda_vector_field(toda.TodaState.vacuum(LatticeWindow(0, 5)))
    assert not np.any(da) and not np.any(db)


def test_vector_field_momentum_kick():
    da, db = toda.toda_vector_field(single(b=1.0))
    # window -1..1
    np.testing.assert_allclose(da, [0.5, -0.5, 0.0])
    np.testing.assert_allclose(db, 0.0)


def test_vector_field_stretched_bond():
    da, db = toda.toda_vector_field(single(a=1.0))
    np.testing.assert_allclose(db, [0.0, 1.5, -1.5])
    np.testing.assert_allclose(da, 0.0)


# -- conserved functionals and the ball --

def test_energy_examples():
    assert toda.energy(toda.TodaState.vacuum(LatticeWindow(0, 3))) == 0.0
    assert toda.energy(single(b=1.0)) == 2.0
    assert abs(toda.energy(single(a=1 / (2 * math.e))) - (math.exp(-2) + 1)) < 1e-15
    assert abs(math.exp(-2) + 1 - 1.135335) < 1e-6


def test_casimir_examples():
    assert toda.casimirs(toda.TodaState.vacuum(W1)) == (0.0, 0.0)
    assert toda.casimirs(single(b=1.0))[1] == -2.0
    assert abs(toda.casimirs(single(a=0.25))[0] - 2 * math.log(2)) < 1e-15


def test_in_ball_threshold():
    # a pure momentum state has H = 2 b^2
    assert toda.in_ball(single(b=math.sqrt(0.009 / 2)), 1.0)
    assert not toda.in_ball(single(b=math.sqrt(0.011 / 2)), 1.0)
    assert toda.in_ball(toda.TodaState.vacuum(W1), 0.1, 1e-3)


def test_out_of_ball_policy():
    s = single(b=0.2)
    with pytest.warns(OutOfBallWarning):
        toda.green_table(s, 1.0, 1)
    with pytest.raises(OutOfBall):
        toda.green_table(s, 1.0, 1, strict=True)


def test_kappa_regime():
    with pytest.raises(ValueError):
        toda.green_table(single(), 0.5, 1)
    toda.green_table(single(), 0.5, 1, unsupported=True)


# -- Lax operator and Green's function --

def test_lax_matrix_entries():
    L = toda.lax_matrix(toda.TodaState.vacuum(W1), 1.0, 1)
    np.testing.assert_allclose(L.diagonal(), math.cosh(1.0))
    np.testing.assert_allclose(L.diagonal(1), -0.5)
    L = toda.lax_matrix(single(b=0.1), 2.0, 1)
    assert L.data[L.window.index(0), L.window.index(0)] == math.cosh(2.0) - 0.1
    assert L.lower == L.upper == 1


def test_free_green_values():
    assert abs(toda.free_green(0, 0, 1.0) - 0.850918) < 1e-6
    assert abs(toda.free_green(3, 0, 1.0) - 0.042365) < 1e-6
    assert toda.free_green(2, 7, 1.3) == toda.free_green(7, 2, 1.3)


def test_green_vacuum_matches_free():
    s = toda.TodaState.vacuum(LatticeWindow(0, 8))
    G = toda.green_table(s, 1.0, 1)
    n = toda.density_sites(s, G)
    np.testing.assert_allclose(G.at(n[:, None], n[None, :]), toda.free_green(n[:, None], n[None, :], 1.0),
                               rtol=0, atol=1e-11)


def test_green_first_order_correction():
    kappa = 1.0
    s = single(b=0.05)
    G = toda.green_table(s, kappa, 1)
    g0 = toda.free_green(np.arange(-3, 4), 0, kappa)
    # L - L0 = -0.05 delta_0, so G - G0 = 0.05 G0(., 0) G0(0, .) + O(0.05^2)
    first = 0.05 * g0 * g0[3]
    err = G.at(np.arange(-3, 4), 0) - toda.free_green(np.arange(-3, 4), 0, kappa) - first
    assert np.max(np.abs(err)) < 0.05 ** 2 * 2


def test_green_positive_and_symmetric():
    s = random_state(1)
    for sign in (1, -1):
        G = toda.green_table(s, 1.0, sign)
        assert np.all(G.values > 0)
        assert np.max(np.abs(G.values - G.values.T)) < 1e-15


# -- densities and currents: frozen 30-digit dense-inverse values on sites -40..40 --

MOMENTUM_KICK = {  # b_0 = 0.05, kappa = 1, sign +
    -1: dict(gamma=0.00021771904109503716, rho=0.00034687194954549645, j=0.00025844292574925458,
             gj=0.000080094359170424556),
    0: dict(gamma=0.0016087382084566172, rho=0.00034687194954549645, j=0.0, gj=0.00059182171311816762),
    1: dict(gamma=0.00021771904109503716, rho=0.00010177821943251621, j=0.00025844292574925458,
            gj=0.00059182171311816762),
}

STRETCH = {  # a_0 = 0.55, kappa = 1.5, sign -
    -1: dict(gamma=0.000026604757012720192, rho=0.00050994797260364120, j=0.000012324365103438792,
             gj=6.386708001355817173e-7),
    0: dict(gamma=0.00053437082931142746, rho=0.0, j=0.0, gj=0.000012828045937885038),
    1: dict(gamma=0.00053437082931142746, rho=0.00050994797260364120, j=0.0, gj=0.00025765819033773750),
}


@pytest.mark.parametrize("state, kappa, sign, table", [
    (single(b=0.05), 1.0, 1, MOMENTUM_KICK),
    (single(a=0.55), 1.5, -1, STRETCH),
])
def test_densities_and_currents_frozen(state, kappa, sign, table):
    # the stretched bond has H = 0.019 > 0.1^2 * 1.5; the formulas hold regardless
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutOfBallWarning)
        G = toda.green_table(state, kappa, sign)
    sites = np.array(sorted(table))
    gamma = toda.gamma_density(state, kappa, sign, G, sites)
    rho = toda.rho_density(state, kappa, sign, G, sites)
    gj, j = toda.currents(state, kappa, sign, G, sites)
    for i, n in enumerate(sites):
        ref = table[n]
        assert abs(gamma[i] - ref["gamma"]) < 1e-12
        assert abs(rho[i] - ref["rho"]) < 1e-12
        assert abs(j[i] - ref["j"]) < 1e-12
        assert abs(gj[i] - ref["gj"]) < 1e-12


def test_densities_against_runtime_dense_oracle():
    s = random_state(7, size=5, amp=0.02)
    a = {n: s.a[i] for i, n in enumerate(s.window.sites)}
    b = {n: s.b[i] for i, n in enumerate(s.window.sites)}
    for kappa, sign in ((1.0, 1), (1.5, -1)):
        G = toda.green_table(s, kappa, sign)
        for n in (-2, 0, 3, 6):
            assert abs(toda.gamma_density(s, kappa, sign, G, [n])[0] - toda_gamma(a, b, kappa, sign, n)) < 1e-10
            assert abs(toda.rho_density(s, kappa, sign, G, [n])[0]
                       - toda_rho_log_ratio(a, b, kappa, sign, n)) < 1e-10


def test_vacuum_densities_and_currents_vanish():
    s = toda.TodaState.vacuum(LatticeWindow(0, 6))
    for kappa in (1.0, 2.5):
        G = toda.green_table(s, kappa, 1)
        gj, j = toda.currents(s, kappa, 1, G)
        for arr in (toda.gamma_density(s, kappa, 1, G), toda.rho_density(s, kappa, 1, G), gj, j):
            assert np.max(np.abs(arr)) < 1e-13


def test_rho_forms_agree():
    s = random_state(2)
    G = toda.green_table(s, 2.0, -1)
    forms = toda.rho_forms(s, 2.0, -1, G)
    for key in ("arcsinh", "log_ratio"):
        assert np.max(np.abs(forms[key] - forms["original"])) < 1e-11


def test_currents_decay_at_report_edges():
    s = single(b=0.05)
    G = toda.green_table(s, 1.0, 1)
    gj, j = toda.currents(s, 1.0, 1, G)
    assert abs(j[0]) < 1e-15 and abs(j[-1]) < 1e-15
    assert abs(gj[0]) < 1e-15 and abs(gj[-1]) < 1e-15
    assert np.sum(np.abs(j)) < 10 * np.max(np.abs(j))


def test_degenerate_offdiagonal():
    s = single()
    G = toda.green_table(s, 1.0, 1)
    bad = type(G)(G.window, -G.values)
    with pytest.raises(DegenerateGreen):
        toda.rho_density(s, 1.0, 1, bad)


# -- conservation, identities, ledgers --

def test_time_derivative_of_green_matches_finite_difference():
    s = random_state(4)
    kappa, sign = 1.0, 1
    G = toda.green_table(s, kappa, sign)
    da, db = toda.toda_vector_field(s)
    h = 1e-6
    wide = s.on(s.window.expand(1))
    Gs = []
    for t in (h, -h):
        st = toda.TodaState(wide.window, wide.a + t * da, wide.b + t * db)
        Gs.append(toda.invert_window(toda.lax_matrix(st, kappa, sign, pad=toda.toda_pad(kappa) - 1)))
    n = np.arange(-5, 20)
    fd = (Gs[0].at(n, n + 1) - Gs[1].at(n, n + 1)) / (2 * h)
    assert np.max(np.abs(sign * fd - toda.green_time_derivative(s, sign, G, n, n + 1))) < 1e-8


def test_vacuum_time_derivative():
    s = toda.TodaState.vacuum(LatticeWindow(0, 4))
    drho, dgamma = toda.density_time_derivative(s, 1.0, 1)
    assert not np.any(drho) and not np.any(dgamma)


@pytest.mark.parametrize("kappa", [1.0, 2.0, 3.0])
@pytest.mark.parametrize("sign", [1, -1])
def test_local_conservation(kappa, sign):
    res = toda.conservation_residuals(random_state(int(kappa) * 10 + sign), kappa, sign)
    assert res["rho_conservation"] < 1e-9
    assert res["gamma_conservation"] < 1e-9


def test_identities_on_vacuum_and_random():
    G = toda.green_table(toda.TodaState.vacuum(LatticeWindow(0, 4)), 1.0, 1)
    assert toda.check_identities(toda.TodaState.vacuum(LatticeWindow(0, 4)), 1.0, 1, G)["quadratic"] < 1e-12
    s = random_state(5)
    for sign in (1, -1):
        res = toda.check_identities(s, 1.0, sign, toda.green_table(s, 1.0, sign))
        assert set(res) == {"quadratic", "d1", "u1", "middle", "involution", "symmetry"}
        assert max(res.values()) < 1e-9


def test_macroscopic_vacuum_and_random():
    m = toda.macroscopic_check(toda.TodaState.vacuum(LatticeWindow(0, 3)), 1.0, 1)
    assert m["lhs_rho"] == 0 and abs(m["rhs_rho"]) == 0
    s = random_state(6)
    for kappa in (1.0, 2.0, 3.0):
        for sign in (1, -1):
            m = toda.macroscopic_check(s, kappa, sign)
            assert abs(m["lhs_rho"] - m["rhs_rho"]) < 1e-8
            assert abs(m["lhs_gamma"] - m["rhs_gamma"]) < 1e-8


def test_casimir_shift_moves_both_sides_equally():
    s = random_state(8)
    shifted = toda.TodaState(s.window, s.a, s.b + 1e-3)
    m0, m1 = toda.macroscopic_check(s, 1.0, 1), toda.macroscopic_check(shifted, 1.0, 1)
    lhs = m1["lhs_rho"] - m0["lhs_rho"]
    rhs = m1["rhs_rho"] - m0["rhs_rho"]
    assert abs(lhs) > 1e-6
    assert abs(lhs - rhs) < 1e-9


# -- convexity --

def test_convexity_at_vacuum():
    s = toda.TodaState.vacuum(LatticeWindow(0, 6))
    rng = np.random.default_rng(0)
    c, d = rng.standard_normal((2, 6))
    out = toda.convexity_probe(s, 1.0, 1, (c, d), np.arange(-3, 9))
    norm2 = c @ c + d @ d
    assert np.all(out["second_diff_rho"] >= -1e-6 * norm2)
    assert np.all(out["second_diff_gamma"] >= -1e-6 * norm2)
    assert np.max(np.abs(out["first_diff_rho"])) < 1e-5
    assert np.max(np.abs(out["first_diff_gamma"])) < 1e-5


def test_convexity_random_state():
    s = random_state(9)
    rng = np.random.default_rng(1)
    dirs = [tuple(rng.standard_normal((2, 16))) for _ in range(20)]
    rho2, gamma2 = toda.convexity_scan(s, 2.0, -1, dirs, np.arange(-4, 20))
    norms = np.array([c @ c + d @ d for c, d in dirs])[:, None]
    assert np.all(rho2 >= -1e-6 * norms) and np.all(gamma2 >= -1e-6 * norms)
    assert np.max(rho2) > 1e-3
    probe = toda.convexity_probe(s, 2.0, -1, dirs[0], 3)
    assert abs(probe["second_diff_rho"] - rho2[0, 7]) < 1e-9
    assert abs(probe["a_gradient"]) < 1e-8


def test_convexity_leaves_ball():
    s = random_state(9)
    with pytest.raises(OutOfBall):
        toda.convexity_probe(s, 1.0, 1, (np.full(16, 1e3), np.zeros(16)), 0, h=1e-2)


def test_report_bundles_everything():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rep = toda.toda_report(random_state(11), 1.0, 1)
    assert rep.rho.shape == rep.gamma.shape == rep.rho_current.shape == (rep.window.size,)
    assert max(rep.residuals.values()) < 1e-9
    assert np.all(rep.rho >= -1e-12) and np.all(rep.gamma >= -1e-12)


@pytest.mark.parametrize("sign", [1, -1])
def test_kappa_derivative_of_rho_sum(sign):
    # d/dkappa sum rho_n = -sinh(kappa) sum gamma_n
    rng = np.random.default_rng(1)
    s = toda.TodaState(LatticeWindow(0, 6), 0.5 * np.exp(0.03 * rng.standard_normal(6)),
                       0.03 * rng.standard_normal(6))
    for kappa in (1.5, 2.0):
        h = 1e-5
        up = toda.macroscopic_check(s, kappa + h, sign)["lhs_rho"]
        down = toda.macroscopic_check(s, kappa - h, sign)["lhs_rho"]
        g = toda.macroscopic_check(s, kappa, sign)["lhs_gamma"]
        assert abs((up - down) / (2 * h) + math.sinh(kappa) * g) < 1e-8
