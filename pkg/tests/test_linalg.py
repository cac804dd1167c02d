import math

import numpy as np
import pytest

from lattice_laws import al, toda
from lattice_laws.errors import LogDetMismatch, SeriesDivergence, SingularMatrix
from lattice_laws.linalg import (
    BandedMatrix,
    hs_norm,
    invert_window,
    log_det_ratio,
    log_det_routes,
    solve_banded,
    trace_log_series,
)
from lattice_laws.window import LatticeWindow

from oracles import al_dense, toda_dense, trace_gamma_lambda


def test_identity_solve():
    w = LatticeWindow(0, 6)
    eye = BandedMatrix(w, np.eye(6), 0, 0)
    np.testing.assert_array_equal(solve_banded(eye, np.eye(6)[0]), np.eye(6)[0])
    np.testing.assert_array_equal(invert_window(eye).values, np.eye(6))


def test_diagonal_scaling():
    w = LatticeWindow(3, 5)
    A = BandedMatrix(w, 2 * np.eye(5), 0, 0)
    np.testing.assert_allclose(solve_banded(A, np.ones(5)), np.full(5, 0.5), rtol=0, atol=1e-15)


def test_free_toda_column_against_dense_inverse():
    w = LatticeWindow(0, 5)
    A = toda.lax_matrix(toda.TodaState.vacuum(w), 1.0, 1, pad=0)
    x = solve_banded(A, np.eye(5)[2])
    expected = np.linalg.inv(toda_dense({}, {}, 1.0, 1, 0, 5))[:, 2]
    np.testing.assert_allclose(x, expected, rtol=1e-13)


def test_solve_residual_bound():
    rng = np.random.default_rng(3)
    w = LatticeWindow(0, 40)
    A = BandedMatrix.tridiagonal(w, 3 + rng.random(40), rng.random(39), rng.random(39))
    rhs = rng.standard_normal(40)
    x = solve_banded(A, rhs)
    bound = 1e-12 * (A.norm_inf() * np.max(np.abs(x)) + np.max(np.abs(rhs)))
    assert np.max(np.abs(A @ x - rhs)) <= bound


def test_complex_rhs_on_real_matrix():
    w = LatticeWindow(0, 4)
    A = BandedMatrix.tridiagonal(w, np.full(4, 3.0), np.ones(3), np.ones(3))
    rhs = np.array([1, 1j, 0, 2 - 1j])
    np.testing.assert_allclose(A @ solve_banded(A, rhs), rhs, atol=1e-14)


def test_singular_pivot_detected():
    w = LatticeWindow(0, 3)
    A = BandedMatrix.tridiagonal(w, np.array([1.0, 1.0, 0.0]), np.zeros(2), np.zeros(2))
    with pytest.raises(SingularMatrix):
        solve_banded(A, np.ones(3))


def test_band_is_validated():
    w = LatticeWindow(0, 3)
    with pytest.raises(ValueError):
        BandedMatrix(w, np.ones((3, 3)), 1, 1)


def test_free_toda_center_matches_closed_form():
    # 9-site window with 20 sites of padding on each side
    s = toda.TodaState.vacuum(LatticeWindow(0, 9))
    G = invert_window(toda.lax_matrix(s, 2.0, 1, pad=20))
    assert abs(G.at(4, 4) - 1 / math.sinh(2.0)) < 1e-10
    assert abs(G.at(4, 4) - 0.275720564771783) < 1e-10


def test_free_al_entry():
    s = al.ALState.vacuum(LatticeWindow(0, 4))
    G = invert_window(al.lax_block(s, 2.0))
    assert abs(G.at(0, 3)[0, 0] - 0.0625) < 1e-12
    np.testing.assert_allclose(G.blocks.shape[2:], (2, 2))


def test_log_det_identical_operators():
    A = toda.lax_matrix(toda.TodaState.vacuum(LatticeWindow(0, 4)), 1.0, 1)
    assert log_det_ratio(A, A) == 0.0


def test_log_det_toda_one_site_against_dense():
    w = LatticeWindow(0, 1)
    s = toda.TodaState(w, [0.5], [0.05])
    A = toda.lax_matrix(s, 1.0, 1)
    A0 = toda.lax_matrix(toda.TodaState.vacuum(w), 1.0, 1)
    lo, hi = A.window.start, A.window.stop
    _, d = np.linalg.slogdet(toda_dense({}, {0: 0.05}, 1.0, 1, lo, hi))
    _, d0 = np.linalg.slogdet(toda_dense({}, {}, 1.0, 1, lo, hi))
    value = log_det_ratio(A, A0)
    assert isinstance(value, float)
    assert abs(value - (d - d0)) < 1e-10
    # 30-digit dense determinant on sites -40..40
    assert abs(value - -0.043477503110072841559) < 1e-12


def test_log_det_al_two_site_against_kernel_sum():
    alpha = {0: 0.1, 1: 0.05 + 0.02j}
    s = al.ALState(LatticeWindow(0, 2), list(alpha.values()))
    A = al.lax_block(s, 2.0)
    A0 = al.lax_block(al.ALState.vacuum(s.window), 2.0)
    value = log_det_ratio(A, A0)
    t = trace_gamma_lambda(alpha, 2.0, 1)
    assert abs(t) > 1e-4
    assert abs(value - t) < 2 * abs(t) ** 2
    lo, hi = A.window.start, A.window.stop
    _, d = np.linalg.slogdet(al_dense(alpha, 2.0, 1, lo, hi))
    _, d0 = np.linalg.slogdet(al_dense({}, 2.0, 1, lo, hi))
    assert abs(value.real - (d - d0)) < 1e-12


def test_series_sign_convention():
    Y = np.array([[0.1, 0.02], [0.0, -0.05]])
    value, terms = trace_log_series(Y)
    assert abs(value - np.log(np.linalg.det(np.eye(2) + Y))) < 1e-14
    assert terms > 5


def test_series_divergence():
    with pytest.raises(SeriesDivergence):
        trace_log_series(np.eye(2))


def test_routes_agree_and_mismatch_is_reported():
    s = toda.TodaState(LatticeWindow(0, 3), [0.5, 0.52, 0.49], [0.01, -0.02, 0.0])
    A = toda.lax_matrix(s, 1.5, -1)
    A0 = toda.lax_matrix(toda.TodaState.vacuum(s.window), 1.5, -1)
    routes = log_det_routes(A, A0)
    assert routes.discrepancy < 1e-13
    with pytest.raises(LogDetMismatch):
        log_det_ratio(A, A0, agree_tol=-1.0)


def test_hs_norm_closed_forms():
    assert hs_norm(np.zeros((3, 3))) == 0.0
    # unit alpha at one site; focusing so |alpha| = 1 is admissible
    s = al.ALState(LatticeWindow(0, 1), [1.0], sign=-1)
    Lam, Gam = al.lambda_gamma_kernels(s, 2.0)
    assert abs(hs_norm(Lam) - math.sqrt(4 / 3)) < 1e-12
    assert abs(hs_norm(Gam) - math.sqrt(1 / 3)) < 1e-12
