"""Brute-force reference implementations used by the tests.

Everything here is written from the defining formulas with explicit loops and
``numpy.linalg``; nothing is imported from the package except the window type.
"""
import numpy as np


def toda_dense(a, b, kappa, sign, lo, hi):
    """Dense ``L_sign`` on sites ``lo..hi-1``; ``a``, ``b`` map site -> value."""
    N = hi - lo
    L = np.zeros((N, N))
    for i in range(N):
        n = lo + i
        L[i, i] = np.cosh(kappa) - sign * b.get(n, 0.0)
        if i + 1 < N:
            L[i, i + 1] = L[i + 1, i] = -a.get(n, 0.5)
    return L


def toda_green(a, b, kappa, sign, lo=-40, hi=41):
    G = np.linalg.inv(toda_dense(a, b, kappa, sign, lo, hi))
    return lambda n, m: G[n - lo, m - lo]


def toda_gamma(a, b, kappa, sign, n, lo=-40, hi=41):
    g = toda_green(a, b, kappa, sign, lo, hi)
    sh = np.sinh(kappa)
    total = 0.0
    for m in set(a) | set(b):
        total += np.log(2 * a.get(m, 0.5)) * np.exp(-2 * kappa * abs(m + 0.5 - n))
        total += sign * b.get(m, 0.0) * np.exp(-2 * kappa * abs(m - n))
    return g(n, n) - 1 / sh - total / sh ** 2


def toda_rho_log_ratio(a, b, kappa, sign, n, lo=-40, hi=41):
    g = toda_green(a, b, kappa, sign, lo, hi)
    total = 0.0
    for m in set(a) | set(b):
        total += np.log(2 * a.get(m, 0.5)) * np.exp(-2 * kappa * abs(n - m))
        total += sign * b.get(m, 0.0) * np.exp(-2 * kappa * abs(n + 0.5 - m))
    return kappa - 0.5 * np.log(g(n, n) * g(n + 1, n + 1) / g(n, n + 1) ** 2) - total


def al_dense(alpha, z, sign, lo, hi, wrap=True):
    """Dense block ``L = U - S`` (site-major) on sites ``lo..hi-1``."""
    N = hi - lo
    L = np.zeros((2 * N, 2 * N), dtype=complex)
    for i in range(N):
        n = lo + i
        a = alpha.get(n, 0.0)
        L[2 * i, 2 * i] = z
        L[2 * i + 1, 2 * i + 1] = 1 / z
        L[2 * i, 2 * i + 1] = a
        L[2 * i + 1, 2 * i] = sign * np.conj(a)
        if i + 1 < N or wrap:
            k = (i + 1) % N
            L[2 * i, 2 * k] -= 1
            L[2 * i + 1, 2 * k + 1] -= 1
    return L


def al_green(alpha, z, sign, lo=-60, hi=61):
    G = np.linalg.inv(al_dense(alpha, z, sign, lo, hi))
    return lambda n, m: G[2 * (n - lo):2 * (n - lo) + 2, 2 * (m - lo):2 * (m - lo) + 2]


def trace_gamma_lambda(alpha, z, sign):
    """``tr(Gamma Lambda)`` summed directly from the kernels of the shift resolvents."""
    sites = sorted(alpha)
    total = 0j
    for n in sites:
        beta_n = sign * np.conj(alpha[n])
        for k in sites:
            if k > n:
                # Gamma(n, k) Lambda(k, n) = beta_n z^(n-k-1) alpha_k z^(n-k+1)
                total += beta_n * alpha[k] * z ** (2 * (n - k))
    return total
