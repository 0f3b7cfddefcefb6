"""Trace-class spatially coloured noise diagonal in the Hermite basis.

The covariance operator is ``Phi e_k = gamma_k e_k`` on the first ``M``
Hermite functions with ``gamma_k = gamma0 (1 + k)^(-s)``. Increments over a
step of length ``dt`` are ``dW(x) = sum_k gamma_k e_k(x) xi_k`` with
``xi_k ~ N(0, dt)``. The Ito-Stratonovich correction is
``F(x) = sum_k gamma_k^2 e_k(x)^2``.

Random numbers come from Philox keyed by ``(seed, path)`` with the step
index placed in a high counter word, so any increment can be regenerated
independently of the order in which paths or steps are visited.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid1D
from .spectral import ComplexField, derivative


class UnresolvedError(ValueError):
    """A field or basis function is not resolved by the grid."""


@dataclass(frozen=True)
class WeightedSpaceParams:
    """Weight exponent ``K`` and derivative count ``N`` of the smooth space.

    ``include_zeroth`` adds the underived term to the sum, which as written
    starts at the first derivative.
    """

    K: int = 10
    N: int = 10
    include_zeroth: bool = False

    def __post_init__(self):
        if self.K < 0 or self.N < 0:
            raise ValueError("K and N must be non-negative")


def hermite_functions(x: np.ndarray, M: int) -> np.ndarray:
    """Orthonormal Hermite functions ``psi_0..psi_{M-1}`` at ``x``, shape (M, len(x)).

    Uses the three-term recurrence on the normalised functions, which stays
    stable for the mode counts used here.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((M, x.size))
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x**2)
    if M > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for j in range(1, M - 1):
        out[j + 1] = np.sqrt(2.0 / (j + 1)) * x * out[j] - np.sqrt(j / (j + 1)) * out[j - 1]
    return out


def _spectral_tail(values: np.ndarray, grid: Grid1D, weight_order: int = 0) -> float:
    """Relative (k^order-weighted) spectral energy above 2/3 of Nyquist."""
    power = np.abs(np.fft.fft(values)) ** 2 * np.abs(grid.k) ** (2 * weight_order)
    total = power.sum()
    if total == 0:
        return 0.0
    return float(power[np.abs(grid.k) > 2.0 / 3.0 * grid.k_max].sum() / total)


def h_norm(f, p: WeightedSpaceParams = WeightedSpaceParams(), tol: float = 1e-10) -> float:
    """Weighted Sobolev-type norm ``sqrt(sum_j ||(1+|x|^K) f^(j)||^2)``.

    ``j`` runs over ``1..N`` (``0..N`` with ``include_zeroth``). Derivatives
    are spectral; raises :class:`UnresolvedError` if the ``N``-th derivative
    has more than ``tol`` of its energy in the top third of the spectrum.
    """
    grid = f.grid
    v = f.values
    if not np.any(v):
        return 0.0
    if p.N > 0 and _spectral_tail(v, grid, p.N) > tol:
        raise UnresolvedError(f"order-{p.N} derivative is not resolved on this grid")
    weight = 1.0 + np.abs(grid.x) ** p.K
    total = 0.0
    start = 0 if p.include_zeroth else 1
    for j in range(start, p.N + 1):
        dj = v if j == 0 else derivative(v, grid, j)
        total += np.sum(np.abs(weight * dj) ** 2) * grid.dx
    return float(np.sqrt(total))


@dataclass(frozen=True)
class NoiseModel:
    grid: Grid1D
    gammas: np.ndarray
    basis: np.ndarray = field(repr=False)
    correction: np.ndarray = field(repr=False)
    seed: int = 0

    @property
    def M(self) -> int:
        return len(self.gammas)

    @property
    def modes(self) -> np.ndarray:
        """``Phi e_k`` as rows, i.e. ``gamma_k e_k(x)``."""
        return self.gammas[:, None] * self.basis

    @property
    def is_zero(self) -> bool:
        return not np.any(self.gammas)

    def gram(self) -> np.ndarray:
        return self.basis @ self.basis.T * self.grid.dx

    def trace_proxy(self, p: WeightedSpaceParams = WeightedSpaceParams()) -> float:
        """``sum_k gamma_k h_norm(e_k)``, finite for any resolved model."""
        return float(
            sum(g * h_norm(ComplexField(self.grid, e), p) for g, e in zip(self.gammas, self.basis))
        )


def correction_field(gammas: np.ndarray, basis: np.ndarray) -> np.ndarray:
    return np.einsum("k,kx->x", np.asarray(gammas) ** 2, basis**2)


def build_noise(M: int, gamma0: float, s: float, grid: Grid1D, seed: int = 0,
                gram_tol: float = 1e-8) -> NoiseModel:
    """Diagonal Hermite noise with ``gamma_k = gamma0 (1+k)^(-s)``, ``k < M``."""
    if M < 1:
        raise ValueError("need at least one mode")
    if gamma0 < 0:
        raise ValueError("gamma0 must be non-negative")
    if s <= 0:
        raise ValueError("decay rate s must be positive")
    basis = hermite_functions(grid.x, M)
    top = basis[-1]
    # the top mode must be negligible at the edges and spectrally resolved
    edge = np.abs(top[np.abs(grid.x) > 0.9 * grid.L]).max(initial=0.0)
    if edge > 1e-10 or _spectral_tail(top, grid) > 1e-12:
        raise UnresolvedError(f"Hermite mode {M - 1} is not resolved on {grid}")
    gram = basis @ basis.T * grid.dx
    if np.abs(gram - np.eye(M)).max() > gram_tol:
        raise UnresolvedError("Hermite basis is not orthonormal on this grid")
    gammas = gamma0 * (1.0 + np.arange(M)) ** (-float(s))
    basis.setflags(write=False)
    corr = correction_field(gammas, basis)
    corr.setflags(write=False)
    return NoiseModel(grid, gammas, basis, corr, int(seed))


def correction_invariance_check(model: NoiseModel, angle: float) -> float:
    """Max pointwise change of the correction field when ``e_0, e_1`` are rotated.

    Only valid when ``gamma_0 == gamma_1``: the rotated pair is then another
    orthonormal eigenbasis of the covariance.
    """
    if model.M < 2:
        raise ValueError("need at least two modes to rotate")
    if model.gammas[0] != model.gammas[1]:
        raise ValueError("rotation changes the operator unless gamma_0 == gamma_1")
    c, s = np.cos(angle), np.sin(angle)
    basis = np.array(model.basis, copy=True)
    e0, e1 = basis[0].copy(), basis[1].copy()
    basis[0] = c * e0 - s * e1
    basis[1] = s * e0 + c * e1
    rotated = correction_field(model.gammas, basis)
    return float(np.abs(rotated - model.correction).max())


@dataclass(frozen=True)
class NoiseKey:
    """Address of one increment: global seed, ensemble path, time step."""

    seed: int
    path: int = 0
    step: int = 0

    def generator(self) -> np.random.Generator:
        bitgen = np.random.Philox(key=[self.seed & (2**64 - 1), self.path],
                                  counter=[0, 0, self.step, 0])
        return np.random.Generator(bitgen)


def sample_coefficients(model: NoiseModel, dt: float, key: NoiseKey) -> np.ndarray:
    """The ``M`` Gaussian coefficients ``xi_k ~ N(0, dt)`` for one step."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return key.generator().standard_normal(model.M) * np.sqrt(dt)


def sample_increment(model: NoiseModel, dt: float, key: NoiseKey) -> np.ndarray:
    """Real increment field ``dW(x)`` over one step; bitwise reproducible."""
    xi = sample_coefficients(model, dt, key)
    return (model.gammas * xi) @ model.basis


def sample_path(model: NoiseModel, dt: float, steps: int, seed: int, path: int = 0,
                start_step: int = 0) -> np.ndarray:
    """Increments for ``steps`` consecutive steps, shape (steps, n)."""
    xi = np.stack([
        sample_coefficients(model, dt, NoiseKey(seed, path, start_step + j)) for j in range(steps)
    ]) if steps else np.zeros((0, model.M))
    return (xi * model.gammas) @ model.basis
