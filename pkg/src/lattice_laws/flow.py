"""Adaptive time integration of the Toda and Ablowitz-Ladik flows, and drift
monitoring of their conserved quantities.

The integrator is classical RK4 with step-doubling error control.  It is not
structure preserving on purpose: conservation is what gets measured, so the
scheme must not enforce it.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import al, toda
from .errors import OutOfBallWarning, StepUnderflow
from .window import LatticeWindow

MIN_STEP = 1e-12
EDGE_SITES = 5
EDGE_THRESHOLD = 1e-13
GROWTH = 16


class _Model:
    """Packs a state into a flat vector and evaluates the vector field on it."""

    def __init__(self, state, vector_field):
        self.kind = "toda" if isinstance(state, toda.TodaState) else "al"
        if self.kind == "al" and not isinstance(state, al.ALState):
            raise TypeError(f"unsupported state type {type(state).__name__}")
        self.sign = getattr(state, "sign", None)
        if vector_field is None:
            vector_field = toda.toda_vector_field if self.kind == "toda" else al.al_vector_field
        self.vector_field = vector_field

    def pack(self, s):
        return np.concatenate([s.a, s.b]) if self.kind == "toda" else s.alpha.copy()

    def unpack(self, y, window):
        if self.kind == "toda":
            N = window.size
            return toda.TodaState(window, y[:N], y[N:])
        return al.ALState(window, y, self.sign)

    def rhs(self, y, window):
        out = self.vector_field(self.unpack(y, window))
        if self.kind == "toda":
            da, db = out
            return np.concatenate([da[1:-1], db[1:-1]])
        return np.asarray(out)[1:-1]

    def deviation(self, y, window):
        """Per-site distance from vacuum."""
        if self.kind == "toda":
            N = window.size
            return np.maximum(np.abs(y[:N] - 0.5), np.abs(y[N:]))
        return np.abs(y)

    def embed(self, y, src, dst):
        s = self.unpack(y, src).on(dst)
        return self.pack(s)


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    step_stats: dict = field(default_factory=dict)

    @property
    def window(self) -> LatticeWindow:
        return self.states[0].window


def _rk4(model, y, f0, h, window):
    k1 = f0
    k2 = model.rhs(y + 0.5 * h * k1, window)
    k3 = model.rhs(y + 0.5 * h * k2, window)
    k4 = model.rhs(y + h * k3, window)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _hermite(t0, y0, f0, t1, y1, f1, t):
    h = t1 - t0
    s = (t - t0) / h
    h00 = 2 * s ** 3 - 3 * s ** 2 + 1
    h10 = s ** 3 - 2 * s ** 2 + s
    h01 = -2 * s ** 3 + 3 * s ** 2
    h11 = s ** 3 - s ** 2
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def integrate(state, vector_field=None, T: float = 1.0, tol: float = 1e-10, *, times=None,
              margin: int = GROWTH, growth: int = GROWTH, first_step: float = 0.05) -> Trajectory:
    """Integrate a Toda or Ablowitz-Ladik state to time ``T``.

    Parameters
    ----------
    state : TodaState or ALState
    vector_field : callable, optional
        Maps a state to its time derivative on ``state.window.expand(1)``;
        defaults to the model's own vector field.
    T : float
        Final time, positive.
    tol : float
        Bound on the step-doubling estimate of the local error (max norm),
        in ``[1e-12, 1e-6]``.
    times : array_like, optional
        Snapshot times in ``[0, T]``; ``0`` and ``T`` are always included.
        Interior snapshots come from cubic Hermite interpolation of accepted
        steps.
    margin, growth : int
        Vacuum sites added up front, and added on a side whenever the
        outermost five sites there deviate from vacuum by more than 1e-13.

    Returns
    -------
    Trajectory
        Snapshots written out on the final (largest) window.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if not 1e-12 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-12, 1e-6]")
    model = _Model(state, vector_field)
    want = np.union1d([0.0, float(T)], [] if times is None else np.asarray(times, dtype=float))
    if want[0] < 0 or want[-1] > T:
        raise ValueError("snapshot times must lie in [0, T]")

    window = state.window.expand(margin)
    y = model.pack(state.on(window))
    t = 0.0
    f = model.rhs(y, window)
    snaps = [(0.0, y.copy(), window)]
    nxt = 1
    h = min(first_step, T)
    steps = rejected = 0
    max_step = 0.0

    while t < T:
        dev = model.deviation(y, window)
        left = growth if np.max(dev[:EDGE_SITES]) > EDGE_THRESHOLD else 0
        right = growth if np.max(dev[-EDGE_SITES:]) > EDGE_THRESHOLD else 0
        if left or right:
            wider = window.expand(left, right)
            y = model.embed(y, window, wider)
            window = wider
            f = model.rhs(y, window)

        h = min(h, T - t)
        if h < MIN_STEP and T - t >= MIN_STEP:
            raise StepUnderflow(f"step {h:.3e} below {MIN_STEP:g} at t = {t:.6g}")
        full = _rk4(model, y, f, h, window)
        half = _rk4(model, y, f, 0.5 * h, window)
        half = _rk4(model, half, model.rhs(half, window), 0.5 * h, window)
        err = float(np.max(np.abs(half - full))) / 15
        if err <= tol:
            t_new = T if T - t - h <= 1e-15 * T else t + h
            f_new = model.rhs(half, window)
            while nxt < len(want) and want[nxt] <= t_new:
                if want[nxt] == t_new:
                    snaps.append((want[nxt], half.copy(), window))
                else:
                    snaps.append((want[nxt], _hermite(t, y, f, t_new, half, f_new, want[nxt]), window))
                nxt += 1
            t, y, f = t_new, half, f_new
            steps += 1
            max_step = max(max_step, h)
        else:
            rejected += 1
        factor = 4.0 if err == 0 else min(4.0, max(0.1, 0.9 * (tol / err) ** 0.2))
        h *= factor
        if h < MIN_STEP and t < T:
            raise StepUnderflow(f"step {h:.3e} below {MIN_STEP:g} at t = {t:.6g}")

    states = [model.unpack(model.embed(ys, w, window), window) for _, ys, w in snaps]
    return Trajectory(np.array([ts for ts, _, _ in snaps]), states,
                      {"steps": steps, "max_step": max_step, "rejected_steps": rejected})


FUNCTIONALS = ("H", "M", "P", "sum_rho", "sum_gamma", "log_det")


@dataclass
class DriftTable:
    """Per-snapshot values and the max drift from the initial value."""

    times: np.ndarray
    values: dict
    drifts: dict
    out_of_ball: list


def _toda_values(s, kappa, sign, which):
    out = {}
    if "H" in which:
        out["H"] = toda.energy(s)
    if "M" in which or "P" in which:
        M, P = toda.casimirs(s)
        out["M"], out["P"] = M, P
    if {"sum_rho", "sum_gamma", "log_det"} & set(which):
        macro = toda.macroscopic_check(s, kappa, sign, toda.invert_window(toda.lax_matrix(s, kappa, sign)))
        out["sum_rho"], out["sum_gamma"], out["log_det"] = macro["lhs_rho"], macro["lhs_gamma"], macro["log_det"]
    return {k: out[k] for k in which}


def _al_values(s, z, which):
    out = {}
    if "H" in which or "M" in which:
        out["M"], out["H"] = al.mass_and_energy(s)
    if {"sum_rho", "sum_gamma", "log_det"} & set(which):
        G = al.invert_window(al.lax_block(s, z))
        rho, gamma = al.densities_al(s, z, G)
        out["sum_rho"], out["sum_gamma"] = complex(np.sum(rho)), complex(np.sum(gamma))
        if "log_det" in which:
            out["log_det"] = -al.perturbation_determinant_al(s, z)
    return {k: out[k] for k in which}


def conservation_monitor(traj: Trajectory, spectral, which=None, *, sign: int = 1) -> DriftTable:
    """Drift of conserved functionals along a trajectory.

    ``spectral`` is ``kappa`` for Toda (with Lax ``sign``) or ``z`` for
    Ablowitz-Ladik.  ``which`` is a subset of ``H, M, P, sum_rho, sum_gamma,
    log_det``; ``P`` has no Ablowitz-Ladik counterpart and is skipped there.
    Snapshots outside the ball are recorded in ``out_of_ball`` and still
    evaluated.
    """
    is_toda = isinstance(traj.states[0], toda.TodaState)
    which = list(FUNCTIONALS if which is None else which)
    unknown = set(which) - set(FUNCTIONALS)
    if unknown:
        raise ValueError(f"unknown functionals {sorted(unknown)}")
    if not is_toda:
        which = [w for w in which if w != "P"]
    rows, flagged = [], []
    for i, s in enumerate(traj.states):
        inside = toda.in_ball(s, spectral) if is_toda else al.in_ball_al(s, spectral)
        if not inside:
            flagged.append(i)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OutOfBallWarning)
            rows.append(_toda_values(s, spectral, sign, which) if is_toda else _al_values(s, spectral, which))
    values = {k: np.array([r[k] for r in rows]) for k in which}
    drifts = {k: float(np.max(np.abs(v - v[0]))) for k, v in values.items()}
    return DriftTable(traj.times, values, drifts, flagged)
