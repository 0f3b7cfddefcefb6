"""Free Schrodinger group e^{it Laplacian} by FFT, and numerical checks of
dispersive decay and Strichartz bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid1D, lp_norm, lp_norms_batch, l2_norm


@dataclass(frozen=True)
class ComplexField:
    """Complex amplitudes ``values`` sampled on ``grid``."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field has non-finite entries")
        object.__setattr__(self, "values", v)

    def __add__(self, other: "ComplexField") -> "ComplexField":
        return ComplexField(self.grid, self.values + other.values)

    def __sub__(self, other: "ComplexField") -> "ComplexField":
        return ComplexField(self.grid, self.values - other.values)

    def __mul__(self, a) -> "ComplexField":
        return ComplexField(self.grid, self.values * a)

    __rmul__ = __mul__


class BoundaryWrapError(RuntimeError):
    """Raised when mass reaches the periodic boundary and images matter."""


def propagator(grid: Grid1D, t: float) -> np.ndarray:
    """Fourier multiplier of S(t): ``exp(-i k^2 t)``."""
    return np.exp(-1j * grid.k**2 * t)


def free_propagate(f: ComplexField, t: float) -> ComplexField:
    """Apply S(t) = e^{it Laplacian}; exact on the discrete space."""
    if t == 0:
        return ComplexField(f.grid, f.values.copy())
    return ComplexField(f.grid, np.fft.ifft(propagator(f.grid, t) * np.fft.fft(f.values)))


def derivative(values: np.ndarray, grid: Grid1D, order: int = 1) -> np.ndarray:
    """Spectral derivative of given order (Nyquist mode zeroed for odd orders)."""
    mult = (1j * grid.k) ** order
    if order % 2 == 1:
        mult = mult.copy()
        mult[grid.n // 2] = 0.0
    return np.fft.ifft(mult * np.fft.fft(values))


def outer_mass_fraction(values: np.ndarray, grid: Grid1D, frac: float = 0.5) -> float:
    """Share of the discrete mass carried by points with ``|x| > frac * L``."""
    w = np.abs(values) ** 2
    total = w.sum()
    if total == 0:
        return 0.0
    return float(w[np.abs(grid.x) > frac * grid.L].sum() / total)


# wrap-around is measured on the outermost eighth of the domain
WRAP_BAND = 7.0 / 8.0


def dispersive_decay_fit(f: ComplexField, t_samples, wrap_tol: float = 1e-6) -> float:
    """Least-squares slope of ``log sup|S(t)f|`` against ``log t``.

    On the line the slope tends to -1/2 for concentrated data. Raises
    :class:`BoundaryWrapError` if, at any sample time, more than ``wrap_tol``
    of the mass sits in the outer band ``|x| > 7L/8``.
    """
    t = np.asarray(t_samples, dtype=float)
    if t.size < 2 or np.any(t <= 0):
        raise ValueError("need at least two positive sample times")
    if l2_norm(f) == 0:
        raise ValueError("cannot fit decay of the zero field")
    f_hat = np.fft.fft(f.values)
    sups = []
    for ti in t:
        u = np.fft.ifft(propagator(f.grid, ti) * f_hat)
        wrap = outer_mass_fraction(u, f.grid, WRAP_BAND)
        if wrap > wrap_tol:
            raise BoundaryWrapError(
                f"mass fraction {wrap:.3g} near the boundary at t={ti} exceeds {wrap_tol}"
            )
        sups.append(np.abs(u).max())
    slope, _ = np.polyfit(np.log(t), np.log(sups), 1)
    return float(slope)


def is_admissible(q: float, r: float, tol: float = 1e-12) -> bool:
    return q >= 2 and r >= 2 and abs(2.0 / q + 1.0 / r - 0.5) <= tol


def strichartz_ratio(f: ComplexField, q: float, r: float, T: float, n_times: int = 201) -> float:
    """``||S(t)f||_{L^q_t L^r_x(0,T)} / ||f||_2`` for an admissible pair.

    Time integral by the trapezoid rule on ``n_times`` equispaced samples;
    ``q = inf`` takes the max over samples.
    """
    if not is_admissible(q, r):
        raise ValueError(f"({q}, r={r}) is not admissible: 2/q + 1/r must equal 1/2")
    norm0 = l2_norm(f)
    if norm0 == 0:
        raise ValueError("zero field")
    ts = np.linspace(0.0, T, n_times)
    f_hat = np.fft.fft(f.values)
    states = np.fft.ifft(np.exp(-1j * np.outer(ts, f.grid.k**2)) * f_hat, axis=1)
    spatial = lp_norms_batch(states, r, f.grid)
    if np.isinf(q):
        return float(spatial.max() / norm0)
    return float(np.trapezoid(spatial**q, ts) ** (1.0 / q) / norm0)


__all__ = [
    "ComplexField",
    "BoundaryWrapError",
    "free_propagate",
    "propagator",
    "derivative",
    "dispersive_decay_fit",
    "strichartz_ratio",
    "is_admissible",
    "outer_mass_fraction",
    "lp_norm",
]
