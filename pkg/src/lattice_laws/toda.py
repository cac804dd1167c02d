"""Toda lattice in Flaschka variables: Lax operators, Green's functions and
the conserved densities built from them.

Conventions
-----------
A state lives on a finite window; outside it ``a = 1/2`` and ``b = 0``.  The
Lax operators ``L_+`` and ``L_-`` act by

    (L_sign f)_n = cosh(kappa) f_n - (a_n f_{n+1} + a_{n-1} f_{n-1} + sign * b_n f_n)

and are truncated with a hard cutoff on the state's window padded by
``ceil(40 / kappa)`` vacuum sites.  Densities are reported on the sites halfway
between the state's window and the truncation edges (see
:func:`lattice_laws.window.report_window`).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGreen, OutOfBall, OutOfBallWarning
from .linalg import BandedMatrix, DenseKernel, invert_window, log_det_routes, solve_banded
from .window import LatticeWindow, embed, report_window, sample, toda_pad

DEFAULT_DELTA = 0.1


@dataclass(frozen=True, eq=False)
class TodaState:
    """Flaschka variables ``(a_n, b_n)`` on a window."""

    window: LatticeWindow
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.shape != (self.window.size,) or b.shape != (self.window.size,):
            raise ValueError("a and b must have one entry per window site")
        if not np.all(a > 0):
            raise ValueError("a_n must be positive")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def vacuum(cls, window: LatticeWindow) -> "TodaState":
        return cls(window, np.full(window.size, 0.5), np.zeros(window.size))

    @property
    def log2a(self) -> np.ndarray:
        return np.log(2 * self.a)

    def a_at(self, sites) -> np.ndarray:
        return sample(self.a, self.window, sites, 0.5)

    def b_at(self, sites) -> np.ndarray:
        return sample(self.b, self.window, sites, 0.0)

    def on(self, window: LatticeWindow) -> "TodaState":
        """The same state written out on a larger window."""
        return TodaState(window, embed(self.a, self.window, window, 0.5),
                         embed(self.b, self.window, window, 0.0))


@dataclass(frozen=True, eq=False)
class TodaPhase:
    """Positions and momenta ``(q_n, p_n)`` on a window.

    Outside the window the momenta vanish and the positions are frozen at the
    nearest edge value, so a net lattice expansion is allowed.
    """

    window: LatticeWindow
    q: np.ndarray
    p: np.ndarray


@dataclass
class TodaDensityReport:
    window: LatticeWindow
    gamma: np.ndarray
    rho: np.ndarray
    gamma_current: np.ndarray
    rho_current: np.ndarray
    residuals: dict = field(default_factory=dict)
    macroscopic: dict = field(default_factory=dict)


def _check_sign(sign: int) -> int:
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    return sign


def _check_kappa(kappa: float, unsupported: bool = False) -> float:
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa!r}")
    if kappa < 1 and not unsupported:
        raise ValueError(f"kappa = {kappa} < 1 is outside the supported regime")
    return float(kappa)


def flaschka_forward(phase: TodaPhase) -> TodaState:
    """``a_n = exp((q_n - q_{n+1}) / 2) / 2`` and ``b_n = -p_n / 2``."""
    q = np.asarray(phase.q, dtype=float)
    p = np.asarray(phase.p, dtype=float)
    q_next = np.append(q[1:], q[-1])
    return TodaState(phase.window, 0.5 * np.exp(0.5 * (q - q_next)), -0.5 * p)


def _rhs(a: np.ndarray, b: np.ndarray):
    """Toda vector field on arrays with vacuum just beyond both ends."""
    b_next = np.append(b[1:], 0.0)
    a_prev = np.insert(a[:-1], 0, 0.5)
    return a * (b_next - b), 2.0 * (a ** 2 - a_prev ** 2)


def toda_vector_field(s: TodaState):
    """``(da/dt, db/dt)`` on ``s.window.expand(1)``.

    The flow moves the support by at most one site per evaluation, so the
    returned arrays are one site wider than the state on each side.
    """
    wide = s.on(s.window.expand(1))
    return _rhs(wide.a, wide.b)


def _V(x):
    return np.exp(-x) + x - 1.0


def energy(s: TodaState) -> float:
    """``H = sum 2 b_n^2 + V(-2 log 2a_n)`` with ``V(x) = e^-x + x - 1``."""
    return float(np.sum(2 * s.b ** 2 + _V(-2 * s.log2a)))


def casimirs(s: TodaState):
    """Net expansion ``M = -sum 2 log 2a_n`` and momentum ``P = -sum 2 b_n``."""
    return float(-2 * np.sum(s.log2a)), float(-2 * np.sum(s.b))


def in_ball(s: TodaState, kappa: float, delta: float = DEFAULT_DELTA) -> bool:
    if delta <= 0:
        raise ValueError("delta must be positive")
    return energy(s) < delta ** 2 * kappa


def _guard_ball(s, kappa, delta, strict):
    if in_ball(s, kappa, delta):
        return
    msg = f"energy {energy(s):.4g} >= delta^2 kappa = {delta ** 2 * kappa:.4g}"
    if strict:
        raise OutOfBall(msg)
    warnings.warn(msg, OutOfBallWarning, stacklevel=3)


def padded_window(s: TodaState, kappa: float) -> LatticeWindow:
    return s.window.expand(toda_pad(kappa))


def lax_matrix(s: TodaState, kappa: float, sign: int, pad: int | None = None) -> BandedMatrix:
    """Truncation of ``L_sign`` to the padded window (symmetric tridiagonal)."""
    _check_sign(sign)
    window = s.window.expand(toda_pad(kappa) if pad is None else pad)
    wide = s.on(window)
    off = -wide.a[:-1]
    return BandedMatrix.tridiagonal(window, math.cosh(kappa) - sign * wide.b, off, off)


def flip_operator(window: LatticeWindow) -> np.ndarray:
    """Diagonal of ``(U f)_n = (-1)^n f_n`` on a window."""
    return np.where(window.sites % 2 == 0, 1.0, -1.0)


def free_green(n, m, kappa: float):
    """Vacuum Green's function ``exp(-kappa |n - m|) / sinh(kappa)``."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    return np.exp(-kappa * np.abs(np.asarray(n) - np.asarray(m))) / math.sinh(kappa)


def green_table(s: TodaState, kappa: float, sign: int, *, delta: float = DEFAULT_DELTA,
                strict: bool = False, unsupported: bool = False) -> DenseKernel:
    """``G_sign(n, m) = <delta_n, L_sign^{-1} delta_m>`` on the padded window.

    States outside the ball ``H < delta^2 kappa`` trigger an
    :class:`OutOfBallWarning`, or :class:`OutOfBall` when ``strict``.
    """
    _check_kappa(kappa, unsupported)
    _guard_ball(s, kappa, delta, strict)
    return invert_window(lax_matrix(s, kappa, sign))


def density_sites(s: TodaState, G: DenseKernel) -> np.ndarray:
    return report_window(s.window, G.window).sites


def _w(x, m, kappa):
    return np.exp(-2 * kappa * np.abs(np.asarray(x, dtype=float)[:, None] - m[None, :]))


def _gamma_renorm(s, kappa, sign, n):
    m = s.window.sites
    sh2 = math.sinh(kappa) ** 2
    return (_w(n - 0.5, m, kappa) @ s.log2a + sign * _w(n, m, kappa) @ s.b) / sh2


def _rho_renorm(s, kappa, sign, n):
    m = s.window.sites
    return _w(n, m, kappa) @ s.log2a + sign * _w(n + 0.5, m, kappa) @ s.b


def gamma_density(s: TodaState, kappa: float, sign: int, G: DenseKernel, sites=None) -> np.ndarray:
    """Renormalized diagonal Green's function ``gamma_n``."""
    _check_sign(sign)
    n = density_sites(s, G) if sites is None else np.asarray(sites)
    return G.at(n, n) - 1 / math.sinh(kappa) - _gamma_renorm(s, kappa, sign, n)


def _offdiag(s, G, n):
    g = G.at(n, n + 1)
    if np.any(g <= 0):
        bad = n[np.flatnonzero(g <= 0)[0]]
        raise DegenerateGreen(f"G({bad}, {bad + 1}) = {G.at(bad, bad + 1):.3e} is not positive")
    return g


def rho_forms(s: TodaState, kappa: float, sign: int, G: DenseKernel, sites=None) -> dict:
    """``rho_n`` evaluated three ways: ``original``, ``arcsinh`` and ``log_ratio``."""
    _check_sign(sign)
    n = density_sites(s, G) if sites is None else np.asarray(sites)
    a = s.a_at(n)
    g01 = _offdiag(s, G, n)
    g00, g11 = G.at(n, n), G.at(n + 1, n + 1)
    renorm = _rho_renorm(s, kappa, sign, n)
    return {
        "original": kappa - 0.5 * np.log1p(1 / (a * g01)) - renorm,
        "arcsinh": kappa - np.arcsinh(1 / np.sqrt(4 * a ** 2 * g00 * g11)) - renorm,
        "log_ratio": kappa - 0.5 * np.log(g00 * g11 / g01 ** 2) - renorm,
    }


def rho_density(s: TodaState, kappa: float, sign: int, G: DenseKernel, sites=None) -> np.ndarray:
    """``rho_n = kappa - log(1 + 1/(a_n G(n, n+1)))/2 - renormalization``.

    Raises
    ------
    DegenerateGreen
        If some ``G(n, n+1) <= 0``.
    """
    return rho_forms(s, kappa, sign, G, sites)["original"]


def currents(s: TodaState, kappa: float, sign: int, G: DenseKernel, sites=None):
    """Currents ``(gamma_j_n, j_n)`` with ``sign * d/dt density_n = current_{n+1} - current_n``."""
    _check_sign(sign)
    n = density_sites(s, G) if sites is None else np.asarray(sites)
    m = s.window.sites
    sh = math.sinh(kappa)
    quad = 4 * s.a ** 2 - 1
    gamma_j = (2 * s.a_at(n - 1) * G.at(n, n - 1) - math.exp(-kappa) / sh
               - _w(n - 1, m, kappa) @ quad / (2 * sh ** 2)
               - sign * _w(n - 0.5, m, kappa) @ s.b / sh ** 2)
    g = G.at(n, n)
    if np.any(g <= 0):
        raise DegenerateGreen("non-positive diagonal Green's function")
    rho_j = (sh - 1 / g
             - _w(n - 0.5, m, kappa) @ quad / 2
             - sign * _w(n, m, kappa) @ s.b)
    return gamma_j, rho_j


def green_time_derivative(s: TodaState, sign: int, G: DenseKernel, n, m):
    """``dG(n, m)/dt`` along the Toda flow, from the Lax equation."""
    n, m = np.broadcast_arrays(np.asarray(n), np.asarray(m))
    a = s.a_at
    return sign * (a(n) * G.at(n + 1, m) - a(n - 1) * G.at(n - 1, m)
                   + a(m) * G.at(n, m + 1) - a(m - 1) * G.at(n, m - 1))


def density_time_derivative(s: TodaState, kappa: float, sign: int, G: DenseKernel | None = None,
                            sites=None):
    """Analytic ``(d rho_n/dt, d gamma_n/dt)`` on the report sites.

    Differentiates the log-ratio form of ``rho_n`` and the definition of
    ``gamma_n`` using the Lax-equation expression for ``dG/dt`` and the Toda
    vector field for the renormalization terms.  No time stepping.
    """
    if G is None:
        G = green_table(s, kappa, sign)
    n = density_sites(s, G) if sites is None else np.asarray(sites)
    da, db = toda_vector_field(s)
    wide = s.window.expand(1).sites
    a_wide = s.a_at(wide)
    dlog2a = da / a_wide
    sh2 = math.sinh(kappa) ** 2

    g00, g11, g01 = G.at(n, n), G.at(n + 1, n + 1), G.at(n, n + 1)
    d00 = green_time_derivative(s, sign, G, n, n)
    d11 = green_time_derivative(s, sign, G, n + 1, n + 1)
    d01 = green_time_derivative(s, sign, G, n, n + 1)
    drho = (-0.5 * (d00 / g00 + d11 / g11 - 2 * d01 / g01)
            - (_w(n, wide, kappa) @ dlog2a + sign * _w(n + 0.5, wide, kappa) @ db))
    dgamma = d00 - (_w(n - 0.5, wide, kappa) @ dlog2a + sign * _w(n, wide, kappa) @ db) / sh2
    return drho, dgamma


def conservation_residuals(s: TodaState, kappa: float, sign: int, G: DenseKernel | None = None) -> dict:
    """Max-abs of ``sign * d/dt density_n - (current_{n+1} - current_n)``."""
    if G is None:
        G = green_table(s, kappa, sign)
    n = density_sites(s, G)
    drho, dgamma = density_time_derivative(s, kappa, sign, G, n)
    gj, j = currents(s, kappa, sign, G, np.append(n, n[-1] + 1))
    return {
        "rho_conservation": float(np.max(np.abs(sign * drho - np.diff(j)))),
        "gamma_conservation": float(np.max(np.abs(sign * dgamma - np.diff(gj)))),
    }


def check_identities(s: TodaState, kappa: float, sign: int, G: DenseKernel) -> dict:
    """Max-abs residuals of the algebraic identities obeyed by ``G``.

    ``quadratic``: ``G(n,n+1)[1 + a_n G(n,n+1)] = a_n G(n,n) G(n+1,n+1)``;
    ``d1``/``u1``: the one-step ratio recursions in the first and second
    argument; ``middle``: ``G(k,l) G(n+1,n) = G(k,n+1) G(n,l)`` for
    ``k <= n < l``; ``involution``: ``L_+ - 2 cosh(kappa) = -U L_- U``;
    ``symmetry``: ``G(n,m) = G(m,n)``.
    """
    n = density_sites(s, G)
    a = s.a_at(n)
    g = G.at(n[:, None], n[None, :])
    g01 = G.at(n, n + 1)
    quadratic = g01 * (1 + a * g01) - a * G.at(n, n) * G.at(n + 1, n + 1)

    nn, kk = n[:, None], n[None, :]
    jump = 1 / (a * g01)[:, None]
    d1 = (G.at(nn + 1, kk) / G.at(nn + 1, nn)
          - G.at(nn, kk) / G.at(nn, nn) * (1 + jump * (kk > nn)))
    u1 = (G.at(nn, kk) / G.at(nn, nn + 1)
          - G.at(nn + 1, kk) / G.at(nn + 1, nn + 1) * (1 + jump * (kk <= nn)))

    middle = 0.0
    for i, site in enumerate(n[:-1]):
        left = n[: i + 1]
        right = n[i + 1:]
        pred = np.outer(G.at(left, site + 1), G.at(site, right)) / G.at(site + 1, site)
        middle = max(middle, float(np.max(np.abs(g[: i + 1, i + 1:] - pred))))

    plus = lax_matrix(s, kappa, +1).data
    minus = lax_matrix(s, kappa, -1).data
    u = flip_operator(padded_window(s, kappa))
    involution = plus - 2 * math.cosh(kappa) * np.eye(len(u)) + u[:, None] * minus * u[None, :]

    return {
        "quadratic": float(np.max(np.abs(quadratic))),
        "d1": float(np.max(np.abs(d1))),
        "u1": float(np.max(np.abs(u1))),
        "middle": middle,
        "involution": float(np.max(np.abs(involution))),
        "symmetry": float(np.max(np.abs(g - g.T))),
    }


def macroscopic_check(s: TodaState, kappa: float, sign: int, G: DenseKernel | None = None) -> dict:
    """Both sides of the summed determinant and trace ledgers.

    ``sum rho = -log det(L/L0) + sign P / (2 sinh) + e^-kappa M / (2 sinh)``
    ``sum gamma = tr(L^-1 - L0^-1) + sign cosh P / (2 sinh^3) + M / (2 sinh^3)``
    """
    if G is None:
        G = green_table(s, kappa, sign)
    L = lax_matrix(s, kappa, sign)
    L0 = lax_matrix(TodaState.vacuum(s.window), kappa, sign)
    routes = log_det_routes(L, L0)
    G0 = invert_window(L0)
    trace = float(np.sum(np.diag(G.values) - np.diag(G0.values)))
    M, P = casimirs(s)
    sh, ch = math.sinh(kappa), math.cosh(kappa)
    log_det = routes.series.real
    return {
        "lhs_rho": float(np.sum(rho_density(s, kappa, sign, G))),
        "rhs_rho": -log_det + sign * P / (2 * sh) + math.exp(-kappa) * M / (2 * sh),
        "lhs_gamma": float(np.sum(gamma_density(s, kappa, sign, G))),
        "rhs_gamma": trace + sign * ch * P / (2 * sh ** 3) + M / (2 * sh ** 3),
        "log_det": log_det,
        "log_det_pivots": routes.pivots.real,
        "trace": trace,
        "M": M,
        "P": P,
    }


def _rho_single(s: TodaState, kappa: float, sign: int, n: int) -> float:
    """``rho_n`` from a single banded solve for column ``n + 1``."""
    L = lax_matrix(s, kappa, sign)
    e = np.zeros(L.n)
    e[L.window.index(n + 1)] = 1.0
    col = solve_banded(L, e)
    g01 = col[L.window.index(n)]
    if g01 <= 0:
        raise DegenerateGreen(f"G({n}, {n + 1}) = {g01:.3e} is not positive")
    a = float(s.a_at(np.array([n]))[0])
    return float(kappa - 0.5 * math.log1p(1 / (a * g01)) - _rho_renorm(s, kappa, sign, np.array([n]))[0])


def _probe_values(st, kappa, sign, sites, delta):
    if not in_ball(st, kappa, delta):
        raise OutOfBall(f"perturbed state has energy {energy(st):.4g}")
    G = invert_window(lax_matrix(st, kappa, sign))
    return rho_density(st, kappa, sign, G, sites), gamma_density(st, kappa, sign, G, sites)


def _shifted(s, c, d, t):
    return TodaState(s.window, s.a * np.exp(t * c), s.b + t * d)


def a_gradient(s: TodaState, kappa: float, sign: int, sites, h: float = 1e-3) -> np.ndarray:
    """Central difference of ``rho_n`` in ``a_n`` alone (zero off the support)."""
    grad = []
    for site in np.atleast_1d(sites):
        if site not in s.window:
            grad.append(0.0)
            continue
        i = s.window.index(site)
        vals = []
        for t in (h, -h):
            a = s.a.copy()
            a[i] += t
            vals.append(_rho_single(TodaState(s.window, a, s.b), kappa, sign, int(site)))
        grad.append((vals[0] - vals[1]) / (2 * h))
    return np.array(grad)


def convexity_probe(s: TodaState, kappa: float, sign: int, direction, n, h: float = 1e-3,
                    *, delta: float = DEFAULT_DELTA) -> dict:
    """Symmetric second differences of ``rho_n`` and ``gamma_n`` along a direction.

    The state moves as ``(a e^{t c}, b + t d)`` for ``t = +-h``; ``n`` may be a
    site or an array of sites.  ``a_gradient`` is the central difference of
    ``rho_n`` in ``a_n`` alone.

    Raises
    ------
    OutOfBall
        If a perturbed state leaves the ball.
    """
    if not 1e-4 <= h <= 1e-2:
        raise ValueError("h must lie in [1e-4, 1e-2]")
    c, d = (np.asarray(v, dtype=float) for v in direction)
    sites = np.atleast_1d(np.asarray(n))
    rho, gamma = zip(*(_probe_values(_shifted(s, c, d, t), kappa, sign, sites, delta)
                       for t in (h, 0.0, -h)))
    out = {
        "second_diff_rho": (rho[0] + rho[2] - 2 * rho[1]) / h ** 2,
        "second_diff_gamma": (gamma[0] + gamma[2] - 2 * gamma[1]) / h ** 2,
        "first_diff_rho": (rho[0] - rho[2]) / (2 * h),
        "first_diff_gamma": (gamma[0] - gamma[2]) / (2 * h),
        "a_gradient": a_gradient(s, kappa, sign, sites, h),
    }
    if np.ndim(n) == 0:
        out = {k: float(v[0]) for k, v in out.items()}
    return out


def convexity_scan(s: TodaState, kappa: float, sign: int, directions, sites, h: float = 1e-3,
                   *, delta: float = DEFAULT_DELTA):
    """Second differences for many directions, sharing the unperturbed evaluation.

    Returns arrays ``(rho, gamma)`` of shape ``(len(directions), len(sites))``.
    """
    sites = np.asarray(sites)
    rho0, gamma0 = _probe_values(s, kappa, sign, sites, delta)
    rho, gamma = [], []
    for c, d in directions:
        c, d = np.asarray(c, dtype=float), np.asarray(d, dtype=float)
        (rp, gp), (rm, gm) = (_probe_values(_shifted(s, c, d, t), kappa, sign, sites, delta)
                              for t in (h, -h))
        rho.append((rp + rm - 2 * rho0) / h ** 2)
        gamma.append((gp + gm - 2 * gamma0) / h ** 2)
    return np.array(rho), np.array(gamma)


def toda_report(s: TodaState, kappa: float, sign: int) -> TodaDensityReport:
    """Densities, currents, identity residuals and ledgers in one pass."""
    G = green_table(s, kappa, sign)
    n = density_sites(s, G)
    forms = rho_forms(s, kappa, sign, G)
    gj, j = currents(s, kappa, sign, G)
    residuals = check_identities(s, kappa, sign, G)
    residuals.update(conservation_residuals(s, kappa, sign, G))
    residuals["rho_forms"] = float(max(np.max(np.abs(forms["original"] - forms["arcsinh"])),
                                       np.max(np.abs(forms["original"] - forms["log_ratio"]))))
    macro = macroscopic_check(s, kappa, sign, G)
    residuals["rho_ledger"] = abs(macro["lhs_rho"] - macro["rhs_rho"])
    residuals["gamma_ledger"] = abs(macro["lhs_gamma"] - macro["rhs_gamma"])
    residuals["log_det_routes"] = abs(macro["log_det"] - macro["log_det_pivots"])
    return TodaDensityReport(
        window=LatticeWindow(int(n[0]), len(n)),
        gamma=gamma_density(s, kappa, sign, G),
        rho=forms["original"],
        gamma_current=gj,
        rho_current=j,
        residuals=residuals,
        macroscopic={
            "sum_rho": macro["lhs_rho"],
            "sum_gamma": macro["lhs_gamma"],
            "log_det": macro["log_det"],
            "trace_diff": macro["trace"],
            "M": macro["M"],
            "P": macro["P"],
        },
    )
