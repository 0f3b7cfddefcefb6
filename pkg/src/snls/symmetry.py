"""The four-parameter unitary group (translation, Galilean boost, scaling,
free-flow time shift) acting on grid fields and on space-time trajectories."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory
from .grid import Grid1D
from .spectral import WRAP_BAND, ComplexField, outer_mass_fraction, propagator


class SymmetryRangeError(ValueError):
    """The transformed field is not resolved by, or does not fit on, the grid."""


@dataclass(frozen=True)
class SymmetryElement:
    x0: float = 0.0
    xi0: float = 0.0
    lambda0: float = 1.0
    t0: float = 0.0

    def __post_init__(self):
        if not self.lambda0 > 0:
            raise ValueError("lambda0 must be positive")

    @property
    def is_identity(self) -> bool:
        return self.x0 == 0 and self.xi0 == 0 and self.lambda0 == 1 and self.t0 == 0


def interpolate(f_hat: np.ndarray, grid: Grid1D, y: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Evaluate the trigonometric interpolant with coefficients ``f_hat`` at ``y``.

    The Nyquist coefficient is split evenly between ``+-k_max`` so real data
    stay real.
    """
    n = grid.n
    k = np.array(grid.k, copy=True)
    c = f_hat / n
    ny = n // 2
    k = np.append(k, -k[ny])
    c = np.append(c, 0.5 * c[ny])
    c[ny] *= 0.5
    out = np.empty(y.shape, dtype=complex)
    shifted = y + grid.L
    for s in range(0, y.size, chunk):
        out[s:s + chunk] = np.exp(1j * np.outer(shifted[s:s + chunk], k)) @ c
    return out


def _check_range(g: SymmetryElement, lam_range):
    lo, hi = lam_range
    if not lo <= g.lambda0 <= hi:
        raise SymmetryRangeError(
            f"lambda0={g.lambda0} outside the resolved range [{lo}, {hi}]; widen lam_range and n"
        )


def _transform_values(values: np.ndarray, grid: Grid1D, lam: float, shift: float, xi: float,
                      pre_time: float = 0.0, support_tol: float = 1e-8,
                      spectral_tol: float = 1e-10) -> np.ndarray:
    """``lam^{-1/2} e^{i xi x} (S(pre_time) f)((x - shift) / lam)``.

    The field is read as living on ``[-L, L)`` and vanishing outside it, so
    both the source and the image must stay clear of the seam.
    """
    f_hat = np.fft.fft(values)
    if pre_time:
        f_hat = f_hat * propagator(grid, pre_time)
    power = np.abs(f_hat) ** 2
    total = power.sum()
    if total == 0:
        return np.zeros(grid.n, dtype=complex)
    # content at wavenumber k lands at k/lam + xi after the transform
    lands = np.abs(grid.k / lam + xi)
    lost = power[lands > grid.k_max * (1 - 1e-12)].sum() / total
    if lost > spectral_tol:
        raise SymmetryRangeError(f"transform pushes {lost:.2e} of the energy past Nyquist")
    src = np.fft.ifft(f_hat)
    seam = outer_mass_fraction(src, grid, WRAP_BAND)
    if seam > support_tol:
        raise SymmetryRangeError(f"{seam:.2e} of the mass sits near the seam before transforming")
    y = (grid.x - shift) / lam
    inside = np.abs(y) < grid.L
    out = np.zeros(grid.n, dtype=complex)
    out[inside] = lam**-0.5 * np.exp(1j * xi * grid.x[inside]) * interpolate(f_hat, grid, y[inside])
    mass = np.abs(out) ** 2
    edge = outer_mass_fraction(out, grid, WRAP_BAND)
    if edge > support_tol:
        raise SymmetryRangeError(f"{edge:.2e} of the transformed mass lies near the seam")
    before = np.sum(np.abs(src) ** 2)
    change = abs(mass.sum() - before) / before
    if change > support_tol:
        raise SymmetryRangeError(f"transform changes the L2 mass by {change:.2e}; grid too small")
    return out


def apply_group(g: SymmetryElement, f: ComplexField, lam_range=(0.125, 8.0),
                support_tol: float = 1e-8) -> ComplexField:
    """``(g f)(x) = lam^{-1/2} e^{i x xi0} (S(-t0/lam^2) f)((x - x0)/lam)``.

    Dilation and translation evaluate the band-limited interpolant of the
    propagated field at the mapped points.
    """
    if g.is_identity:
        return ComplexField(f.grid, f.values.copy())
    _check_range(g, lam_range)
    vals = _transform_values(f.values, f.grid, g.lambda0, g.x0, g.xi0,
                             pre_time=-g.t0 / g.lambda0**2, support_tol=support_tol)
    return ComplexField(f.grid, vals)


def spacetime_deform(traj: Trajectory, g: SymmetryElement, lam_range=(0.125, 8.0),
                     support_tol: float = 1e-8, horizon=None) -> Trajectory:
    """Map ``Phi`` to ``lam^{-1/2} e^{i xi x} e^{-i xi^2 t} Phi((t-t0)/lam^2, (x-x0-2 xi t)/lam)``.

    Snapshot ``s_j`` of the input becomes time ``t_j = t0 + lam^2 s_j`` of the
    output. ``horizon=(a, b)`` raises if the mapped times leave that window.
    """
    if g.is_identity:
        return Trajectory(traj.grid, traj.times.copy(), traj.states.copy(), traj.running.copy(),
                          traj.dt, traj.stride, traj.noise_record, traj.spec)
    _check_range(g, lam_range)
    lam = g.lambda0
    times = g.t0 + lam**2 * traj.times
    if horizon is not None:
        a, b = horizon
        if times[0] < a - 1e-12 or times[-1] > b + 1e-12:
            raise SymmetryRangeError(f"mapped times [{times[0]}, {times[-1]}] leave {horizon}")
    states = np.empty_like(traj.states)
    for j, (t, u) in enumerate(zip(times, traj.states)):
        vals = _transform_values(u, traj.grid, lam, g.x0 + 2 * g.xi0 * t, g.xi0,
                                 support_tol=support_tol)
        states[j] = vals * np.exp(-1j * g.xi0**2 * t)
    # ||Psi||_{L10}^5 = lam^-2 ||Phi||_{L10}^5 and dt = lam^2 ds, so the running value carries over
    return Trajectory(traj.grid, times, states, traj.running.copy(), traj.dt * lam**2,
                      traj.stride, None, traj.spec)


def orthogonality_gap(g1: SymmetryElement, g2: SymmetryElement) -> float:
    """``l1/l2 + l2/l1 + |x1-x2|/l1 + l1 |xi1-xi2| + |t1-t2|/l1^2``."""
    l1, l2 = g1.lambda0, g2.lambda0
    return float(
        l1 / l2 + l2 / l1
        + abs((g1.x0 - g2.x0) / l1)
        + abs(l1 * (g1.xi0 - g2.xi0))
        + abs((g1.t0 - g2.t0) / l1**2)
    )
