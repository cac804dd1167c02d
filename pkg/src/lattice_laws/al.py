"""Ablowitz-Ladik lattice: zero-curvature pair, block Lax operator
``L = U - S``, its Green's function, and the conserved densities built from it.

Conventions
-----------
``beta_n = sign * conj(alpha_n)`` with ``sign = +1`` defocusing and ``-1``
focusing; ``beta`` is always derived, never stored.  Block operators act on
``C^2``-valued sequences stored site-major: index ``2 n + c`` for component
``c``.  Truncations pad the state's window by ``ceil(40 / log|z|)`` vacuum
sites and let ``S`` wrap around the padded window.  With a hard cutoff the
truncated ``1/z - S`` would be triangular with an inverse growing like
``|z|^N``; the wrap keeps the inverse bounded and only perturbs entries at
distance ``~pad`` from the support, which are ``O(|z|^-pad)``.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGreen, DomainError, LogDetMismatch, OutOfBall, OutOfBallWarning
from .linalg import BandedMatrix, DenseKernel, invert_window, log_det_ratio, trace_log_series
from .window import LatticeWindow, al_pad, embed, report_window, sample

DEFAULT_DELTA = 0.1
SIGMA3 = np.diag([1.0, -1.0])


@dataclass(frozen=True, eq=False)
class ALState:
    """Complex field ``alpha_n`` on a window, vacuum outside."""

    window: LatticeWindow
    alpha: np.ndarray
    sign: int = 1

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=complex)
        if alpha.shape != (self.window.size,):
            raise ValueError("alpha must have one entry per window site")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign!r}")
        if self.sign == 1 and np.any(np.abs(alpha) >= 1):
            raise DomainError("defocusing states need |alpha_n| < 1")
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def vacuum(cls, window: LatticeWindow, sign: int = 1) -> "ALState":
        return cls(window, np.zeros(window.size, dtype=complex), sign)

    @property
    def beta(self) -> np.ndarray:
        return self.sign * np.conj(self.alpha)

    def alpha_at(self, sites) -> np.ndarray:
        return sample(self.alpha, self.window, sites, 0j)

    def beta_at(self, sites) -> np.ndarray:
        return self.sign * np.conj(self.alpha_at(sites))

    def on(self, window: LatticeWindow) -> "ALState":
        return ALState(window, embed(self.alpha, self.window, window, 0j), self.sign)


@dataclass(frozen=True, eq=False)
class TransferPair:
    """Per-site ``U_n`` and ``V_n`` (shape ``(N, 2, 2)``) on ``window``."""

    window: LatticeWindow
    U: np.ndarray
    V: np.ndarray


@dataclass
class ALDensityReport:
    window: LatticeWindow
    rho: np.ndarray
    gamma: np.ndarray
    j: np.ndarray
    gamma_j: np.ndarray
    residuals: dict = field(default_factory=dict)
    macroscopic: dict = field(default_factory=dict)


def _check_z(z, unsupported: bool = False) -> complex:
    z = complex(z)
    if abs(z) <= 1:
        raise ValueError(f"|z| must exceed 1, got {abs(z)}")
    if abs(z) < 2 and not unsupported:
        raise ValueError(f"|z| = {abs(z):.4g} < 2 is outside the supported regime")
    return z


def al_vector_field(s: ALState) -> np.ndarray:
    """``d alpha/dt`` on ``s.window.expand(1)``.

    ``i d alpha_n/dt = 2 alpha_n - (1 - alpha_n beta_n)(alpha_{n+1} + alpha_{n-1})``
    """
    wide = s.on(s.window.expand(1))
    return _rhs(wide.alpha, s.sign)


def _rhs(alpha: np.ndarray, sign: int) -> np.ndarray:
    """Vector field on an array with vacuum just beyond both ends."""
    nxt = np.append(alpha[1:], 0j)
    prv = np.insert(alpha[:-1], 0, 0j)
    return -1j * (2 * alpha - (1 - sign * np.abs(alpha) ** 2) * (nxt + prv))


def mass_and_energy(s: ALState):
    """``M = -sum log(1 - alpha beta)`` and
    ``H = sum -alpha_n beta_{n+1} - alpha_{n+1} beta_n - 2 log(1 - alpha_n beta_n)``.
    """
    ab = s.alpha * s.beta
    if np.any(ab.real >= 1):
        raise DomainError("1 - alpha_n beta_n must stay positive")
    logs = np.log1p(-ab.real)
    M = float(-np.sum(logs))
    cross = np.sum(s.alpha[:-1] * s.beta[1:] + s.alpha[1:] * s.beta[:-1])
    return M, float(-cross.real - 2 * np.sum(logs))


def in_ball_al(s: ALState, z, delta: float = DEFAULT_DELTA) -> bool:
    """``|M| e^|M| < delta^2 (|z|^2 - 1) / |z|``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    M = abs(mass_and_energy(s)[0])
    r = abs(complex(z))
    return M * math.exp(M) < delta ** 2 * (r * r - 1) / r


def _guard_ball(s, z, delta, strict):
    if in_ball_al(s, z, delta):
        return
    msg = f"mass {mass_and_energy(s)[0]:.4g} outside the ball for |z| = {abs(z):.4g}, delta = {delta}"
    if strict:
        raise OutOfBall(msg)
    warnings.warn(msg, OutOfBallWarning, stacklevel=3)


def transfer_pair(s: ALState, z, sites=None) -> TransferPair:
    """``U_n = [[z, alpha_n], [beta_n, 1/z]]`` and the matching ``V_n``."""
    z = complex(z)
    window = s.window.expand(1) if sites is None else None
    n = window.sites if sites is None else np.asarray(sites)
    a, b = s.alpha_at(n), s.beta_at(n)
    am, bm = s.alpha_at(n - 1), s.beta_at(n - 1)
    U = np.empty((len(n), 2, 2), dtype=complex)
    U[:, 0, 0], U[:, 0, 1], U[:, 1, 0], U[:, 1, 1] = z, a, b, 1 / z
    V = np.empty_like(U)
    V[:, 0, 0] = z ** 2 - 1 - a * bm
    V[:, 0, 1] = z * a - am / z
    V[:, 1, 0] = z * bm - b / z
    V[:, 1, 1] = 1 + am * b - z ** -2
    V *= 1j
    return TransferPair(window if window is not None else LatticeWindow(int(n[0]), len(n)), U, V)


def padded_window(s: ALState, z) -> LatticeWindow:
    return s.window.expand(al_pad(z))


def shift_block(window: LatticeWindow) -> np.ndarray:
    """Dense ``S (x) I`` on a window, wrapping at the ends."""
    N = window.size
    S = np.zeros((2 * N, 2 * N))
    i = np.arange(N)
    for c in (0, 1):
        S[2 * i + c, 2 * ((i + 1) % N) + c] = 1.0
    return S


def lax_block(s: ALState, z, pad: int | None = None) -> BandedMatrix:
    """``L = [[z - S, alpha], [beta, 1/z - S]]`` on the padded window."""
    z = complex(z)
    window = s.window.expand(al_pad(z) if pad is None else pad)
    wide = s.on(window)
    N = window.size
    i = np.arange(N)
    data = -shift_block(window).astype(complex)
    data[2 * i, 2 * i] += z
    data[2 * i, 2 * i + 1] = wide.alpha
    data[2 * i + 1, 2 * i] = wide.beta
    data[2 * i + 1, 2 * i + 1] += 1 / z
    return BandedMatrix(window, data, 1, 2, block=2, periodic=True)


def free_green_al(n, m, z) -> np.ndarray:
    """``diag(z^(n-m-1) 1_{n<=m}, -z^(m-n+1) 1_{n>m})``."""
    z = complex(z)
    if abs(z) <= 1:
        raise ValueError("|z| must exceed 1")
    n, m = np.broadcast_arrays(np.asarray(n), np.asarray(m))
    out = np.zeros(n.shape + (2, 2), dtype=complex)
    up = n <= m
    out[..., 0, 0] = np.where(up, z ** np.where(up, n - m - 1, 0).astype(float), 0)
    out[..., 1, 1] = np.where(~up, -z ** np.where(~up, m - n + 1, 0).astype(float), 0)
    return out


@functools.lru_cache(maxsize=16)
def _vacuum_green(window: LatticeWindow, z: complex) -> DenseKernel:
    """Green's function of ``L0`` on an already padded window (shared, read-only)."""
    return invert_window(lax_block(ALState.vacuum(window), z, pad=0))


def green_table_al(s: ALState, z, *, delta: float = DEFAULT_DELTA, strict: bool = False,
                   unsupported: bool = False) -> DenseKernel:
    """Block Green's function ``G(n, m)`` of ``L`` on the padded window.

    Out-of-ball states warn with :class:`OutOfBallWarning`, or raise
    :class:`OutOfBall` when ``strict``.
    """
    z = _check_z(z, unsupported)
    _guard_ball(s, z, delta, strict)
    return invert_window(lax_block(s, z))


def density_sites(s: ALState, G: DenseKernel) -> np.ndarray:
    return report_window(s.window, G.window).sites


def lambda_gamma_kernels(s: ALState, z, columns: LatticeWindow | None = None):
    """``Lambda = alpha (S - 1/z)^-1`` and ``Gamma = beta (z - S)^-1`` as arrays.

    ``Lambda(k, m) = alpha_k z^(m-k+1) 1_{k>m}`` and
    ``Gamma(n, k) = beta_n z^(n-k-1) 1_{n<=k}``.  Rows run over the state's
    window (all other rows vanish); columns over ``columns``, by default the
    padded window.
    """
    z = complex(z)
    cols = (padded_window(s, z) if columns is None else columns).sites
    d = (s.window.sites[:, None] - cols[None, :]).astype(float)
    with np.errstate(over="ignore"):
        Lam = np.where(d > 0, s.alpha[:, None] * z ** np.where(d > 0, 1 - d, 0), 0)
        Gam = np.where(d <= 0, s.beta[:, None] * z ** np.where(d <= 0, d - 1, 0), 0)
    return Lam, Gam


def _gamma_lambda(s: ALState, z) -> np.ndarray:
    """``Gamma Lambda`` restricted to the support (the only rows that matter for traces)."""
    z = complex(z)
    n = s.window.sites.astype(float)
    k = n
    # (Gamma Lambda)(n, m) = beta_n sum_{k >= n, k > m} alpha_k z^(n + m - 2k)
    mask = (k[None, None, :] >= n[:, None, None]) & (k[None, None, :] > n[None, :, None])
    powers = z ** (n[:, None, None] + n[None, :, None] - 2 * k[None, None, :])
    return s.beta[:, None] * np.sum(np.where(mask, powers * s.alpha[None, None, :], 0), axis=2)


def perturbation_determinant_al(s: ALState, z) -> complex:
    """``-log det[L L0^-1]`` from the trace-log series in ``Gamma Lambda``.

    Cross-checked against pivot logs of the truncated block operators.

    Raises
    ------
    SeriesDivergence
        If ``||Gamma Lambda||_HS >= 1``.
    LogDetMismatch
        If the series and the truncated determinant disagree beyond 1e-9.
    """
    z = complex(z)
    value, _ = trace_log_series(_gamma_lambda(s, z))
    value = -complex(value)
    direct = log_det_ratio(lax_block(s, z), lax_block(ALState.vacuum(s.window, s.sign), z))
    diff = abs(complex(direct) + value)
    if diff > 1e-9:
        raise LogDetMismatch(f"series and truncated determinant differ by {diff:.3e}")
    return value


def _nondeg(s, z, G, n):
    g00 = G.at(n, n)[:, 0, 0]
    g10 = G.at(n + 1, n)[:, 0, 0]
    if np.any(np.abs(g00) < 0.1 / abs(z)):
        raise DegenerateGreen("|G11(n,n)| < 0.1/|z|")
    if np.any(np.abs(1 + g10) < 0.5):
        raise DegenerateGreen("|1 + G11(n+1,n)| < 0.5")


def density_forms_al(s: ALState, z, G: DenseKernel, sites=None) -> dict:
    """``rho`` three ways and ``gamma`` two ways on the report sites.

    Keys ``rho``, ``rho_alt1``, ``rho_alt``, ``gamma``, ``gamma_2g11``.
    """
    z = complex(z)
    n = density_sites(s, G) if sites is None else np.asarray(sites)
    _nondeg(s, z, G, n)
    _nondeg(s, z, G, n + 1)
    Gnn, G11, G10 = G.at(n, n), G.at(n + 1, n + 1), G.at(n + 1, n)
    a, b1 = s.alpha_at(n), s.beta_at(n + 1)
    gamma = G10[:, 0, 0] - G10[:, 1, 1] - 1
    rho = (0.5 * np.log(1 + a * Gnn[:, 1, 0] / (z * Gnn[:, 0, 0]))
           + 0.5 * np.log(1 + b1 * G11[:, 0, 1] / (z * G11[:, 0, 0])))
    rho_alt1 = (-0.5 * np.log(1 - 2 * a * Gnn[:, 1, 0] / (2 + gamma))
                - 0.5 * np.log(1 - 2 * b1 * G11[:, 0, 1] / (2 + gamma)))
    # z^2 inside the log keeps the argument near 1; a separate -log z is off by i*pi when Re z < 0
    rho_alt = 0.5 * np.log((1 + G10[:, 0, 0]) ** 2 / (z * z * Gnn[:, 0, 0] * G11[:, 0, 0]))
    return {"rho": rho, "rho_alt1": rho_alt1, "rho_alt": rho_alt,
            "gamma": gamma, "gamma_2g11": 2 * G10[:, 0, 0]}


def densities_al(s: ALState, z, G: DenseKernel, sites=None):
    """``(rho_n, gamma_n)`` on the report sites.

    Raises
    ------
    DegenerateGreen
        If ``|G11(n,n)| < 0.1/|z|`` or ``|1 + G11(n+1,n)| < 0.5``.
    """
    forms = density_forms_al(s, z, G, sites)
    return forms["rho"], forms["gamma"]


def currents_al(s: ALState, z, G: DenseKernel, sites=None):
    """``(j_n, gamma_j_n)`` with ``d/dt density_n = current_{n+1} - current_n``."""
    z = complex(z)
    n = density_sites(s, G) if sites is None else np.asarray(sites)
    Gnn = G.at(n, n)
    g00 = Gnn[:, 0, 0]
    if np.any(np.abs(g00) < 0.1 / abs(z)):
        raise DegenerateGreen("|G11(n,n)| < 0.1/|z|")
    a, am, ap = s.alpha_at(n), s.alpha_at(n - 1), s.alpha_at(n + 1)
    b, bm, bp = s.beta_at(n), s.beta_at(n - 1), s.beta_at(n + 1)
    j = (0.5j * (z * a - am / z) * Gnn[:, 1, 0] / g00
         + 0.5j * (z * b - bp / z) * Gnn[:, 0, 1] / g00
         - 0.5j * a * bm - 0.5j * ap * b)
    far = G.at(n + 1, n - 1)
    gamma_j = 2j * z * far[:, 0, 0] + 2j / z * (far[:, 1, 1] + 1 / z)
    return j, gamma_j


def green_time_derivative_al(s: ALState, z, G: DenseKernel, n, m) -> np.ndarray:
    """``dG(n, m)/dt = V_n G(n, m) - G(n, m) V_{m+1}``."""
    n, m = np.broadcast_arrays(np.asarray(n), np.asarray(m))
    Vn = transfer_pair(s, z, n.ravel()).V.reshape(n.shape + (2, 2))
    Vm = transfer_pair(s, z, (m + 1).ravel()).V.reshape(m.shape + (2, 2))
    g = G.at(n, m)
    return Vn @ g - g @ Vm


def density_time_derivative_al(s: ALState, z, G: DenseKernel | None = None, sites=None):
    """Analytic ``(d rho_n/dt, d gamma_n/dt)`` on the report sites.

    Differentiates ``rho_n = log(1 + G11(n+1,n)) - log G11(n,n)/2 -
    log G11(n+1,n+1)/2 - log z`` and ``gamma_n = 2 G11(n+1,n)`` through the
    Lax equation for ``G``.  No time stepping.
    """
    if G is None:
        G = green_table_al(s, z)
    n = density_sites(s, G) if sites is None else np.asarray(sites)
    d10 = green_time_derivative_al(s, z, G, n + 1, n)[:, 0, 0]
    d00 = green_time_derivative_al(s, z, G, n, n)[:, 0, 0]
    d11 = green_time_derivative_al(s, z, G, n + 1, n + 1)[:, 0, 0]
    g10 = G.at(n + 1, n)[:, 0, 0]
    g00 = G.at(n, n)[:, 0, 0]
    g11 = G.at(n + 1, n + 1)[:, 0, 0]
    drho = d10 / (1 + g10) - 0.5 * d00 / g00 - 0.5 * d11 / g11
    return drho, 2 * d10


def conservation_residuals_al(s: ALState, z, G: DenseKernel | None = None) -> dict:
    if G is None:
        G = green_table_al(s, z)
    n = density_sites(s, G)
    drho, dgamma = density_time_derivative_al(s, z, G, n)
    j, gj = currents_al(s, z, G, np.append(n, n[-1] + 1))
    return {
        "rho_conservation": float(np.max(np.abs(drho - np.diff(j)))),
        "gamma_conservation": float(np.max(np.abs(dgamma - np.diff(gj)))),
    }


def _block_trace(G: DenseKernel, G0: DenseKernel, weight: np.ndarray) -> complex:
    """``tr{(G - G0) S weight}`` on the whole (wrapped) padded window."""
    N = G.window.size
    D = G.values - G0.values
    W = shift_block(G.window) @ np.kron(np.eye(N), weight)
    return complex(np.sum(D * W.T))


def al_identity_checks(s: ALState, z, G: DenseKernel) -> dict:
    """Max-abs residuals of the algebraic identities obeyed by ``G``.

    ``det``: ``det G(n,m) = 0``; ``trace``: ``tr G(n+1,n) = -1``; ``nD``,
    ``nU``, ``nD2``, ``nU2``: the propagation identities between ``G(n,.)``
    and ``G(n+1,.)``; ``wrap``: ``U_n G(n,n) = 1 + G(n+1,n) = G(n+1,n+1) U_{n+1}``;
    ``vacuous``: ``tr{(L^-1 - L0^-1) S} = 0``.
    """
    z = complex(z)
    n = density_sites(s, G)
    nn, kk = n[:, None], n[None, :]
    Gnk = G.at(nn, kk)
    det = Gnk[..., 0, 0] * Gnk[..., 1, 1] - Gnk[..., 0, 1] * Gnk[..., 1, 0]
    G10 = G.at(n + 1, n)
    trace = G10[:, 0, 0] + G10[:, 1, 1] + 1

    a, b1 = s.alpha_at(n)[:, None], s.beta_at(n + 1)[:, None]
    ab, ab1 = 1 - a * s.beta_at(n)[:, None], 1 - b1 * s.alpha_at(n + 1)[:, None]
    h = 1 + G10[:, 0, 0][:, None]
    g00 = G.at(n, n)[:, 0, 0][:, None]
    g11 = G.at(n + 1, n + 1)[:, 0, 0][:, None]
    below = kk < nn
    above = kk > nn + 1
    nD = (G.at(nn + 1, kk)[..., 0, 1] / h - G.at(nn, kk)[..., 0, 1] / g00
          - a * G.at(nn + 1, kk)[..., 1, 1] * below / (ab * h * g00))
    nU = (G.at(kk, nn)[..., 1, 0] / h - G.at(kk, nn + 1)[..., 1, 0] / g11
          - b1 * G.at(kk, nn)[..., 1, 1] * above / (ab1 * h * g11))
    nD2 = ((kk == nn) + G.at(nn + 1, kk)[..., 0, 0]) / h - G.at(nn, kk)[..., 0, 0] / g00 \
        - a * G.at(nn + 1, kk)[..., 1, 0] * below / (ab * g00 * h)
    nU2 = ((kk == nn + 1) + G.at(kk, nn)[..., 0, 0]) / h - G.at(kk, nn + 1)[..., 0, 0] / g11 \
        - b1 * G.at(kk, nn)[..., 0, 1] * above / (ab1 * g11 * h)

    pair = transfer_pair(s, z, n)
    pair1 = transfer_pair(s, z, n + 1)
    eye = np.eye(2)
    wrap = max(np.max(np.abs(pair.U @ G.at(n, n) - eye - G10)),
               np.max(np.abs(G.at(n + 1, n + 1) @ pair1.U - eye - G10)))

    G0 = _vacuum_green(G.window, z)
    return {
        "det": float(np.max(np.abs(det))),
        "trace": float(np.max(np.abs(trace))),
        "nD": float(np.max(np.abs(nD))),
        "nU": float(np.max(np.abs(nU))),
        "nD2": float(np.max(np.abs(nD2))),
        "nU2": float(np.max(np.abs(nU2))),
        "wrap": float(wrap),
        "vacuous": abs(_block_trace(G, G0, eye)),
    }


def macroscopic_check_al(s: ALState, z, G: DenseKernel | None = None) -> dict:
    """Both sides of ``sum rho = log det[L L0^-1]`` and
    ``sum gamma = tr{(L^-1 - L0^-1) S sigma3}``."""
    z = complex(z)
    if G is None:
        G = green_table_al(s, z)
    rho, gamma = densities_al(s, z, G)
    G0 = _vacuum_green(G.window, z)
    return {
        "sum_rho": complex(np.sum(rho)),
        "log_det": -perturbation_determinant_al(s, z),
        "sum_gamma": complex(np.sum(gamma)),
        "weighted_trace": _block_trace(G, G0, SIGMA3),
    }


def z_derivative_check(s: ALState, z, h: float = 1e-5) -> dict:
    """``z d/dz log det[L L0^-1]`` by central difference against
    ``tr{(L^-1 - L0^-1) S sigma3}``."""
    z = complex(z)

    def logdet(w):
        pad = al_pad(z)
        return complex(log_det_ratio(lax_block(s, w, pad), lax_block(ALState.vacuum(s.window, s.sign), w, pad)))

    lhs = (logdet(z * (1 + h)) - logdet(z * (1 - h))) / (2 * h)
    G = invert_window(lax_block(s, z))
    G0 = _vacuum_green(G.window, z)
    return {"lhs": lhs, "rhs": _block_trace(G, G0, SIGMA3)}


COERCIVITY_NODES = 4096


def coercivity_check(direction_alpha, z: float, sign: int, eps: float = 1e-3,
                     *, delta: float = DEFAULT_DELTA) -> dict:
    """Quadratic parts of ``sum Im j_n`` and ``sum Re rho~_n`` against their Fourier forms.

    ``Q(F) = [F(eps d) + F(-eps d)] / (2 eps^2)``; the Fourier sides are
    ``-+ mean 2 z^2 sin^2(t) / |z^2 - e^{it}|^2 |d^(t)|^2`` and
    ``+- mean (z^4 - 1) / (2 |z^2 - e^{it}|^2) |d^(t)|^2`` over equispaced
    nodes, with ``d^(t) = sum d_n e^{i n t}``.  Here
    ``rho~_n = rho_n - log(1 - alpha_n beta_n) / 2`` and
    ``j~_n = j_n + i (alpha_n beta_{n-1} - alpha_{n-1} beta_n) / 2``.
    """
    if isinstance(z, complex) or not z >= 2:
        raise ValueError("coercivity checks need real z >= 2")
    if not 1e-3 <= eps <= 1e-2:
        raise ValueError("eps must lie in [1e-3, 1e-2]")
    d = np.asarray(direction_alpha, dtype=complex)
    window = LatticeWindow(0, len(d))
    if not np.any(d):
        return {"sum_im_j2": 0.0, "dft_im": 0.0, "sum_re_rho2": 0.0, "dft_re": 0.0}

    def F(t):
        st = ALState(window, t * d, sign)
        if not in_ball_al(st, z, delta):
            raise OutOfBall(f"eps-scaled direction leaves the ball at z = {z}")
        G = invert_window(lax_block(st, z))
        n = density_sites(st, G)
        rho, _ = densities_al(st, z, G, n)
        j, _ = currents_al(st, z, G, n)
        jt = j + 0.5j * (st.alpha_at(n) * st.beta_at(n - 1) - st.alpha_at(n - 1) * st.beta_at(n))
        rt = rho - 0.5 * np.log(1 - st.alpha_at(n) * st.beta_at(n))
        return np.array([np.sum(jt.imag), np.sum(rt.real)])

    Q = (F(eps) + F(-eps)) / (2 * eps ** 2)
    theta = 2 * np.pi * np.arange(COERCIVITY_NODES) / COERCIVITY_NODES
    hat = np.exp(1j * np.outer(theta, window.sites)) @ d
    w = np.abs(z ** 2 - np.exp(1j * theta)) ** 2
    power = np.abs(hat) ** 2
    return {
        "sum_im_j2": float(Q[0]),
        "dft_im": float(-sign * np.mean(2 * z ** 2 * np.sin(theta) ** 2 / w * power)),
        "sum_re_rho2": float(Q[1]),
        "dft_re": float(sign * np.mean((z ** 4 - 1) / (2 * w) * power)),
    }


def al_report(s: ALState, z) -> ALDensityReport:
    """Densities, currents, identity residuals and ledgers in one pass."""
    z = complex(z)
    G = green_table_al(s, z)
    n = density_sites(s, G)
    forms = density_forms_al(s, z, G)
    j, gj = currents_al(s, z, G)
    residuals = al_identity_checks(s, z, G)
    residuals.update(conservation_residuals_al(s, z, G))
    residuals["rho_forms"] = float(max(np.max(np.abs(forms["rho"] - forms["rho_alt1"])),
                                       np.max(np.abs(forms["rho"] - forms["rho_alt"]))))
    residuals["gamma_forms"] = float(np.max(np.abs(forms["gamma"] - forms["gamma_2g11"])))
    macro = macroscopic_check_al(s, z, G)
    residuals["rho_ledger"] = abs(macro["sum_rho"] - macro["log_det"])
    residuals["gamma_ledger"] = abs(macro["sum_gamma"] - macro["weighted_trace"])
    return ALDensityReport(LatticeWindow(int(n[0]), len(n)), forms["rho"], forms["gamma"], j, gj,
                           residuals, macro)
