"""Periodic collocation grid on [-L, L) and the spatial norms built on it."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid with ``n`` points on ``[-L, L)``.

    ``x`` holds the collocation points and ``k`` the physical wavenumbers in
    standard FFT ordering (``pi * signed_index / L``).
    """

    L: float
    n: int
    x: np.ndarray = field(repr=False, compare=False)
    k: np.ndarray = field(repr=False, compare=False)

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def k_max(self) -> float:
        return np.pi * (self.n // 2) / self.L

    def zeros(self) -> np.ndarray:
        return np.zeros(self.n, dtype=complex)

    def __hash__(self):
        return hash((self.L, self.n))

    def __eq__(self, other):
        return isinstance(other, Grid1D) and (self.L, self.n) == (other.L, other.n)


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def make_grid(L: float, n: int) -> Grid1D:
    """Build a :class:`Grid1D`; ``n`` must be a power of two, at least 8."""
    if not np.isfinite(L) or L <= 0:
        raise ValueError(f"half width must be positive, got L={L!r}")
    if int(n) != n or not _is_power_of_two(int(n)) or n < 8:
        raise ValueError(f"n must be a power of two >= 8, got n={n!r}")
    n = int(n)
    dx = 2.0 * L / n
    x = -L + dx * np.arange(n)
    k = np.pi * np.fft.fftfreq(n, d=1.0 / n) / L
    x.setflags(write=False)
    k.setflags(write=False)
    return Grid1D(float(L), n, x, k)


def _values(f) -> np.ndarray:
    return np.asarray(getattr(f, "values", f))


def _grid(f, grid):
    g = getattr(f, "grid", None) if grid is None else grid
    if g is None:
        raise ValueError("a grid is required when passing a bare array")
    return g


def l2_norm(f, grid: Grid1D | None = None) -> float:
    """Rectangle-rule L2 norm ``sqrt(sum |f|^2 dx)``.

    ``f`` is a :class:`~snls.spectral.ComplexField` or an array together with
    an explicit ``grid``.
    """
    g = _grid(f, grid)
    v = _values(f)
    return float(np.sqrt(np.sum(np.abs(v) ** 2) * g.dx))


def lp_norm(f, p: float, grid: Grid1D | None = None) -> float:
    """Discrete L^p norm; ``p = inf`` is the max over grid points."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p!r}")
    g = _grid(f, grid)
    a = np.abs(_values(f))
    if np.isinf(p):
        return float(a.max()) if a.size else 0.0
    peak = a.max()
    if peak == 0.0:
        return 0.0
    # scale by the peak so large p does not overflow
    return float(peak * (np.sum((a / peak) ** p) * g.dx) ** (1.0 / p))


def lp_norms_batch(values: np.ndarray, p: float, grid: Grid1D) -> np.ndarray:
    """Row-wise :func:`lp_norm` for a 2-D array of fields."""
    a = np.abs(np.atleast_2d(values))
    peak = a.max(axis=1)
    if np.isinf(p):
        return peak
    safe = np.where(peak > 0, peak, 1.0)
    return peak * (np.sum((a / safe[:, None]) ** p, axis=1) * grid.dx) ** (1.0 / p)
