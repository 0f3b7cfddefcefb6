"""Initial data: Gaussians, plane waves and the quintic ground state."""

from __future__ import annotations

import numpy as np

from .grid import Grid1D, l2_norm
from .spectral import ComplexField, derivative


def gaussian(grid: Grid1D, mass: float = 1.0, width: float = 1.0, center: float = 0.0,
             velocity: float = 0.0) -> ComplexField:
    """``exp(-(x-center)^2 / (2 width^2) + i velocity x)`` scaled to L2 norm ``mass``."""
    vals = np.exp(-((grid.x - center) ** 2) / (2 * width**2) + 1j * velocity * grid.x)
    f = ComplexField(grid, vals)
    norm = l2_norm(f)
    return ComplexField(grid, vals * (mass / norm)) if norm > 0 else f


def plane_wave(grid: Grid1D, amplitude: float = 1.0, mode: int = 0) -> ComplexField:
    """``amplitude * exp(i k x)`` for the ``mode``-th grid wavenumber."""
    kk = np.pi * mode / grid.L
    return ComplexField(grid, amplitude * np.exp(1j * kk * grid.x))


def ground_state_line(x) -> np.ndarray:
    """``Q(x) = 3^{1/4} sech(2x)^{1/2}``, the positive solution of -Q'' + Q = Q^5 on the line."""
    return 3**0.25 / np.sqrt(np.cosh(2 * np.asarray(x, dtype=float)))


def ground_state(grid: Grid1D, images: int = 3, alpha: float = 1.0) -> ComplexField:
    """``alpha * Q`` on the torus, periodised by summing ``2*images + 1`` copies.

    Q decays only like ``e^{-|x|}``, so the bare restriction to [-L, L) has a
    derivative jump of order ``Q(L)`` at the seam; the periodic sum removes it.
    """
    vals = np.zeros(grid.n)
    for j in range(-images, images + 1):
        vals += ground_state_line(grid.x + 2 * grid.L * j)
    return ComplexField(grid, alpha * vals)


def ground_state_residual(grid: Grid1D, images: int = 3) -> float:
    """``max |-Q'' + Q - Q^5|`` with spectral differentiation."""
    q = ground_state(grid, images).values.real
    r = -derivative(q, grid, 2).real + q - q**5
    return float(np.abs(r).max())


GROUND_STATE_MASS = np.sqrt(3.0) * np.pi / 2
