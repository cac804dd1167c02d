"""Finite index ranges on the integer lattice."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LatticeWindow:
    """Sites ``start, start + 1, ..., start + size - 1``.

    Everything outside a window is taken to be vacuum by the model that owns
    the window.
    """

    start: int
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"window size must be >= 1, got {self.size}")

    @property
    def stop(self) -> int:
        return self.start + self.size

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.start, self.stop)

    def expand(self, left: int, right: int | None = None) -> "LatticeWindow":
        if right is None:
            right = left
        return LatticeWindow(self.start - left, self.size + left + right)

    def index(self, n):
        """Array position of site label(s) ``n``."""
        return np.asarray(n) - self.start

    def __contains__(self, n) -> bool:
        return self.start <= n < self.stop

    def covers(self, other: "LatticeWindow") -> bool:
        return self.start <= other.start and other.stop <= self.stop

    def union(self, other: "LatticeWindow") -> "LatticeWindow":
        lo = min(self.start, other.start)
        hi = max(self.stop, other.stop)
        return LatticeWindow(lo, hi - lo)


def toda_pad(kappa: float) -> int:
    """Vacuum margin for Toda truncations; boundary error is about exp(-40)."""
    return math.ceil(40.0 / kappa)


def al_pad(z: complex) -> int:
    """Vacuum margin for Ablowitz-Ladik truncations; error is about exp(-40)."""
    return math.ceil(40.0 / math.log(abs(z)))


def report_window(state: LatticeWindow, padded: LatticeWindow) -> LatticeWindow:
    """Sites halfway between the state's support and the truncation edges.

    Densities on these sites are unaffected by the hard cutoff at the padded
    edges, and everything beyond them is negligible.
    """
    left = (state.start - padded.start) // 2
    right = (padded.stop - state.stop) // 2
    return state.expand(left, right)


def embed(values: np.ndarray, src: LatticeWindow, dst: LatticeWindow, fill) -> np.ndarray:
    """Copy ``values`` living on ``src`` into an array on ``dst`` filled with ``fill``."""
    if not dst.covers(src):
        raise ValueError(f"{dst} does not cover {src}")
    out = np.full(dst.size, fill, dtype=np.result_type(values, type(fill)))
    lo = src.start - dst.start
    out[lo:lo + src.size] = values
    return out


def sample(values: np.ndarray, window: LatticeWindow, sites, fill):
    """Values at arbitrary site labels, with ``fill`` outside ``window``."""
    sites = np.asarray(sites)
    idx = sites - window.start
    inside = (idx >= 0) & (idx < window.size)
    out = np.full(sites.shape, fill, dtype=np.result_type(values, type(fill)))
    out[inside] = values[idx[inside]]
    return out
