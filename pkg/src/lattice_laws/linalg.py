"""Banded linear algebra on truncated lattice operators.

Matrices here are small (a few hundred rows), so values are kept dense and the
band structure is carried as metadata.  Non-wrapped matrices are factored with
LAPACK's banded LU (``?gbtrf``); wrapped (periodic) ones with dense ``?getrf``.
Partial pivoting is always on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import LogDetMismatch, SeriesDivergence, SingularMatrix
from .window import LatticeWindow

PIVOT_RTOL = 1e-14
SERIES_TERM_TOL = 1e-14
SERIES_MAX_TERMS = 2000


@dataclass(frozen=True, eq=False)
class BandedMatrix:
    """Square matrix on a lattice window with ``block`` unknowns per site.

    ``lower``/``upper`` are the scalar bandwidths of the (site-major,
    interleaved) matrix.  With ``periodic`` set the band is measured cyclically,
    which is how shift operators wrap around the window.
    """

    window: LatticeWindow
    data: np.ndarray
    lower: int
    upper: int
    block: int = 1
    periodic: bool = False

    def __post_init__(self):
        n = self.window.size * self.block
        if self.data.shape != (n, n):
            raise ValueError(f"expected {(n, n)} matrix, got {self.data.shape}")
        if self.lower < 0 or self.upper < 0:
            raise ValueError("bandwidths must be nonnegative")
        i, j = np.indices(self.data.shape)
        off = j - i
        if self.periodic:
            off = np.where(off > self.upper, off - n, off)
            off = np.where(off < -self.lower, off + n, off)
        outside = (off > self.upper) | (off < -self.lower)
        if np.any(self.data[outside] != 0):
            raise ValueError("entries outside the declared band")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dtype(self):
        return self.data.dtype

    def diagonal(self, offset: int = 0) -> np.ndarray:
        return np.diagonal(self.data, offset).copy()

    def entries(self) -> dict:
        """Nonzero entries keyed by ``(row, column offset)``."""
        rows, cols = np.nonzero(self.data)
        return {(int(r), int(c - r)): self.data[r, c] for r, c in zip(rows, cols)}

    def norm_inf(self) -> float:
        return float(np.abs(self.data).sum(axis=1).max())

    def __matmul__(self, other):
        return self.data @ np.asarray(other)

    @classmethod
    def tridiagonal(cls, window, diag, sub, sup):
        n = window.size
        dtype = np.result_type(diag, sub, sup)
        data = np.zeros((n, n), dtype=dtype)
        idx = np.arange(n)
        data[idx, idx] = diag
        data[idx[1:], idx[:-1]] = sub
        data[idx[:-1], idx[1:]] = sup
        return cls(window, data, 1, 1)


@dataclass(frozen=True, eq=False)
class DenseKernel:
    """Full kernel ``K(n, m)`` on a window, scalar or ``block x block`` valued."""

    window: LatticeWindow
    values: np.ndarray
    block: int = 1

    @property
    def blocks(self) -> np.ndarray:
        """View with shape ``(N, N, block, block)``."""
        n, b = self.window.size, self.block
        return self.values.reshape(n, b, n, b).transpose(0, 2, 1, 3)

    def at(self, n, m):
        """Kernel values at site labels ``(n, m)`` (broadcasting)."""
        i = np.asarray(n) - self.window.start
        j = np.asarray(m) - self.window.start
        if self.block == 1:
            return self.values[i, j]
        return self.blocks[i, j]


class _Factorization:
    """LU factors of a BandedMatrix with the pivot guard applied."""

    def __init__(self, A: BandedMatrix):
        self.A = A
        dtype = np.result_type(A.dtype, np.float64)
        self.complex = np.issubdtype(dtype, np.complexfloating)
        prefix = "z" if self.complex else "d"
        data = A.data.astype(np.complex128 if self.complex else np.float64)
        n = A.n
        self.banded = not A.periodic
        if self.banded:
            kl, ku = A.lower, A.upper
            ab = np.zeros((2 * kl + ku + 1, n), dtype=data.dtype)
            for off in range(-kl, ku + 1):
                d = np.diagonal(data, off)
                if off >= 0:
                    ab[kl + ku - off, off:] = d
                else:
                    ab[kl + ku - off, :n + off] = d
            lu, piv, info = getattr(lapack, prefix + "gbtrf")(ab, kl, ku)
            udiag = lu[kl + ku]
            self._trs = getattr(lapack, prefix + "gbtrs")
            self.kl, self.ku = kl, ku
        else:
            lu, piv, info = getattr(lapack, prefix + "getrf")(data)
            udiag = np.diagonal(lu)
            self._trs = getattr(lapack, prefix + "getrs")
        if info < 0:
            raise ValueError(f"LAPACK argument error {info}")
        scale = A.norm_inf()
        if info > 0 or scale == 0 or np.min(np.abs(udiag)) < PIVOT_RTOL * scale:
            raise SingularMatrix(
                f"pivot {np.min(np.abs(udiag)):.3e} below {PIVOT_RTOL:g} * ||A||_inf = {PIVOT_RTOL * scale:.3e}"
            )
        self.lu, self.piv, self.udiag = lu, piv, udiag

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs)
        dtype = np.complex128 if (self.complex or np.iscomplexobj(rhs)) else np.float64
        if dtype == np.complex128 and not self.complex:
            return self.solve(rhs.real) + 1j * self.solve(rhs.imag)
        b = rhs.astype(dtype)
        if self.banded:
            x, info = self._trs(self.lu, self.kl, self.ku, b, self.piv)
        else:
            x, info = self._trs(self.lu, self.piv, b)
        if info != 0:
            raise ValueError(f"LAPACK solve failed with info={info}")
        return x

    def log_det(self) -> complex:
        swaps = int(np.count_nonzero(self.piv != np.arange(len(self.piv))))
        u = self.udiag.astype(np.complex128)
        return complex(np.sum(np.log(u))) + (1j * math.pi if swaps % 2 else 0.0)


def factorize(A: BandedMatrix) -> _Factorization:
    return _Factorization(A)


def solve_banded(A: BandedMatrix, rhs) -> np.ndarray:
    """Solve ``A x = rhs`` with partially pivoted LU.

    Raises
    ------
    SingularMatrix
        If a pivot falls below ``1e-14 * ||A||_inf``.
    """
    return _Factorization(A).solve(rhs)


def invert_window(A: BandedMatrix) -> DenseKernel:
    """Full inverse of ``A`` on its window, solved column by column."""
    eye = np.eye(A.n, dtype=A.dtype)
    return DenseKernel(A.window, _Factorization(A).solve(eye), A.block)


def hs_norm(K) -> float:
    """Hilbert-Schmidt (Frobenius) norm of a kernel or plain array."""
    values = K.values if isinstance(K, DenseKernel) else np.asarray(K)
    return float(np.sqrt(np.sum(np.abs(values) ** 2)))


def trace_log_series(Y: np.ndarray, *, term_tol: float = SERIES_TERM_TOL,
                     max_terms: int = SERIES_MAX_TERMS):
    """``log det(I + Y) = sum_{l>=1} (-1)^(l+1) tr(Y^l) / l``.

    Stops once the bound ``||Y||_HS^l / l`` on the next term drops below
    ``term_tol``.  Returns ``(value, number_of_terms)``.

    Raises
    ------
    SeriesDivergence
        If ``||Y||_HS >= 1``.
    """
    hs = hs_norm(Y)
    if hs >= 1.0:
        raise SeriesDivergence(f"Hilbert-Schmidt norm {hs:.6g} >= 1")
    total = np.trace(Y)
    power = Y
    ell = 1
    while ell < max_terms:
        ell += 1
        if hs ** ell / ell < term_tol:
            break
        power = power @ Y
        total = total + (-1) ** (ell + 1) * np.trace(power) / ell
    return total, ell - 1


@dataclass(frozen=True)
class LogDetRoutes:
    series: complex
    pivots: complex
    terms: int
    hs: float

    @property
    def discrepancy(self) -> float:
        return abs(self.series - self.pivots)


def _reconcile(pivots: complex, reference: complex) -> complex:
    """Shift the imaginary part of ``pivots`` by a multiple of 2*pi toward ``reference``."""
    k = round((pivots.imag - reference.imag) / (2 * math.pi))
    return complex(pivots.real, pivots.imag - 2 * math.pi * k)


def log_det_routes(A: BandedMatrix, A0: BandedMatrix) -> LogDetRoutes:
    """``log det(A A0^{-1})`` by pivot logs and by the trace-log series.

    The series runs over ``X = (A - A0) A0^{-1}`` restricted to the rows where
    ``A`` and ``A0`` differ; traces of powers of ``X`` only see those rows.
    """
    if A.window != A0.window or A.block != A0.block:
        raise ValueError("A and A0 must share a window and block size")
    f0 = _Factorization(A0)
    D = A.data - A0.data
    rows = np.flatnonzero(np.any(D != 0, axis=1))
    if rows.size == 0:
        return LogDetRoutes(0.0, 0.0, 0, 0.0)
    # X[rows, :] = D[rows, :] @ A0^{-1}, i.e. solve A0^T Z = D[rows, :]^T
    Xr = _transpose_solve(A0, D[rows, :].T).T
    hs = hs_norm(Xr)
    if hs >= 1.0:
        raise SeriesDivergence(f"Hilbert-Schmidt norm of (A-A0)A0^-1 is {hs:.6g} >= 1")
    series, terms = trace_log_series(Xr[:, rows])
    series = complex(series)
    pivots = _reconcile(_Factorization(A).log_det() - f0.log_det(), series)
    return LogDetRoutes(series, pivots, terms, hs)


def _transpose_solve(A: BandedMatrix, rhs: np.ndarray) -> np.ndarray:
    At = BandedMatrix(A.window, A.data.T.copy(), A.upper, A.lower, A.block, A.periodic)
    return _Factorization(At).solve(rhs)


def log_det_ratio(A: BandedMatrix, A0: BandedMatrix, *, agree_tol: float = 1e-9):
    """``log det(A A0^{-1})``; the series value, checked against pivot logs.

    Complex results agree in real part and in imaginary part modulo 2*pi; real
    input with a positive determinant ratio returns a float.

    Raises
    ------
    SeriesDivergence
        If ``||(A - A0) A0^{-1}||_HS >= 1``.
    LogDetMismatch
        If the two routes differ by more than ``agree_tol``.
    """
    routes = log_det_routes(A, A0)
    if routes.discrepancy > agree_tol:
        raise LogDetMismatch(
            f"series {routes.series} vs pivots {routes.pivots} (|diff| = {routes.discrepancy:.3e})"
        )
    value = routes.series
    if not (np.iscomplexobj(A.data) or np.iscomplexobj(A0.data)) and abs(value.imag) < 1e-300:
        return value.real
    return value


__all__ = [
    "BandedMatrix",
    "DenseKernel",
    "LogDetRoutes",
    "factorize",
    "hs_norm",
    "invert_window",
    "log_det_ratio",
    "log_det_routes",
    "solve_banded",
    "trace_log_series",
]
