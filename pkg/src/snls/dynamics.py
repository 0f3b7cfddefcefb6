"""Split-step time integration of the truncated (sub)critical stochastic NLS

    i u_t + u_xx = sign * c * theta_m(A + ||u||_{X2(0,t)}^p) |u|^(4-eps) u + u o dW/dt

and the discrete Duhamel identity used to verify it.

Each step is Strang-split: half free flow, exact nonlinear phase rotation,
noise step, half free flow. ``theta`` is frozen at the left end of the step and
the running ``||u||_{X2}^5 = int ||u||_{L10}^5 dt`` is accumulated with the
left-endpoint rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import Grid1D, lp_norms_batch
from .noise import NoiseKey, NoiseModel, sample_coefficients
from .spectral import ComplexField, propagator

DEFOCUSING = 1
FOCUSING = -1


@dataclass(frozen=True)
class EquationSpec:
    """Parameters of the equation being integrated.

    ``convention`` picks the noise integrator: ``"stratonovich"`` uses the exact
    phase ``exp(-i dW)``; ``"ito"`` uses an Euler-Maruyama multiplier.
    ``ito_correction_on`` selects the equation: with the correction (the
    mass-conserving one) or the plain Ito equation without it.
    """

    sign: int = DEFOCUSING
    c: float = 1.0
    epsilon: float = 0.0
    m: float = math.inf
    A: float = 0.0
    theta_power: float = 5.0
    noise_on: bool = False
    ito_correction_on: bool = True
    convention: str = "stratonovich"

    def __post_init__(self):
        if self.sign not in (DEFOCUSING, FOCUSING):
            raise ValueError("sign must be +1 (defocusing) or -1 (focusing)")
        if not 0.0 <= self.c <= 1.0:
            raise ValueError(f"c must lie in [0, 1], got {self.c}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not self.m > 0:
            raise ValueError(f"m must be positive or inf, got {self.m}")
        if self.A < 0:
            raise ValueError(f"A must be non-negative, got {self.A}")
        if self.theta_power <= 0:
            raise ValueError("theta_power must be positive")
        if self.convention not in ("stratonovich", "ito"):
            raise ValueError(f"unknown convention {self.convention!r}")

    def with_(self, **changes) -> "EquationSpec":
        return replace(self, **changes)


class BlowUpError(RuntimeError):
    """Numerical blow-up: non-finite values, huge amplitude or loss of resolution."""

    def __init__(self, step: int, t: float, reason: str):
        super().__init__(f"blow-up at step {step} (t={t:.6g}): {reason}")
        self.step = step
        self.t = t
        self.reason = reason


@dataclass(frozen=True)
class BlowUpPolicy:
    max_amplitude: float = 1e8
    # share of spectral energy above 2/3 Nyquist that counts as under-resolved
    max_spectral_tail: float = 1e-4


@dataclass
class Trajectory:
    """Snapshots of one solution path.

    ``states[j]`` is the field at ``times[j]``; ``running[j]`` is
    ``||u||_{X2(t_start, times[j])}^5``. ``noise_record`` holds one increment
    field per step (``None`` when noise is off); ``stride`` is the number of
    steps between snapshots.
    """

    grid: Grid1D
    times: np.ndarray
    states: np.ndarray
    running: np.ndarray
    dt: float
    stride: int = 1
    noise_record: np.ndarray | None = None
    spec: EquationSpec | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=complex))
        self.running = np.asarray(self.running, dtype=float)
        if len(self.times) != len(self.states) or len(self.times) != len(self.running):
            raise ValueError("times, states and running must align")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def field(self, j: int) -> ComplexField:
        return ComplexField(self.grid, self.states[j])

    @property
    def final(self) -> ComplexField:
        return self.field(-1)

    def window(self, a: float, b: float) -> np.ndarray:
        """Indices of stored times in ``[a, b]`` (with a little float slack)."""
        tol = 1e-9 * max(1.0, abs(self.times[-1]))
        return np.nonzero((self.times >= a - tol) & (self.times <= b + tol))[0]


def theta_bump(y):
    """Smooth cutoff: 1 on [0, 1], 0 on [2, inf), C-infinity in between."""
    y = np.asarray(y, dtype=float)
    out = np.where(y <= 1.0, 1.0, 0.0)
    mid = (y > 1.0) & (y < 2.0)
    if np.any(mid):
        a = 2.0 - y[mid]
        b = y[mid] - 1.0
        fa = np.exp(-1.0 / a)
        fb = np.exp(-1.0 / b)
        out[mid] = fa / (fa + fb)
    return out if out.ndim else float(out)


def theta_cutoff(x: float, m: float) -> float:
    """``theta(x / m)``; identically 1 when ``m`` is infinite."""
    if x < 0:
        raise ValueError("theta_cutoff is defined for x >= 0")
    if math.isinf(m):
        return 1.0
    return float(theta_bump(x / m))


def theta_argument(spec: EquationSpec, running: float) -> float:
    """``A + ||u||_{X2}^p`` given the running fifth power."""
    if spec.theta_power == 5.0:
        return spec.A + running
    return spec.A + running ** (spec.theta_power / 5.0)


def theta_factor(spec: EquationSpec, running: float) -> float:
    return theta_cutoff(theta_argument(spec, running), spec.m)


def _power(absu: np.ndarray, epsilon: float) -> np.ndarray:
    if epsilon == 0.0:
        a2 = absu * absu
        return a2 * a2
    # 0 ** (4 - eps) is 0, which is what we want
    return absu ** (4.0 - epsilon)


def nonlinearity_values(u: np.ndarray, spec: EquationSpec, theta: float = 1.0) -> np.ndarray:
    return spec.sign * spec.c * theta * _power(np.abs(u), spec.epsilon) * u


def nonlinearity(u: ComplexField, spec: EquationSpec, theta: float = 1.0) -> ComplexField:
    """``sign * c * theta * |u|^(4-eps) u`` pointwise."""
    return ComplexField(u.grid, nonlinearity_values(u.values, spec, theta))


def _nonlinear_phase(v: np.ndarray, spec: EquationSpec, theta: float, dt: float) -> np.ndarray:
    if spec.c == 0.0 or theta == 0.0:
        return v
    rate = (spec.sign * spec.c * theta) * _power(np.abs(v), spec.epsilon)
    return v * np.exp(-1j * dt * rate)


def step_deterministic(u: ComplexField, dt: float, spec: EquationSpec,
                       running: float = 0.0) -> ComplexField:
    """One Strang step of the noiseless equation; ``theta`` frozen from ``running``.

    Negative ``dt`` runs the step backwards; with ``m = inf`` it is the exact
    inverse of the forward step.
    """
    half = propagator(u.grid, dt / 2)
    v = np.fft.ifft(half * np.fft.fft(u.values))
    v = _nonlinear_phase(v, spec, theta_factor(spec, running), dt)
    return ComplexField(u.grid, np.fft.ifft(half * np.fft.fft(v)))


def _noise_multiplier(dW: np.ndarray, dt: float, spec: EquationSpec,
                      correction: np.ndarray | None) -> np.ndarray:
    if spec.convention == "stratonovich":
        mult = np.exp(-1j * dW)
        if not spec.ito_correction_on:
            # the uncorrected Ito equation is the Stratonovich one plus +F/2
            mult = mult * np.exp(0.5 * dt * _require(correction))
        return mult
    mult = 1.0 - 1j * dW
    if spec.ito_correction_on:
        mult = mult - 0.5 * dt * _require(correction)
    return mult


def _require(correction):
    if correction is None:
        raise ValueError("the correction field is needed for this noise convention")
    return correction


def step_noise(u: ComplexField, dW: np.ndarray, dt: float, spec: EquationSpec,
               correction: np.ndarray | None = None) -> ComplexField:
    """Multiply by the noise factor for one step.

    Stratonovich: ``exp(-i dW)`` (times ``exp(F dt / 2)`` without the
    correction). Ito: ``1 - i dW - F dt / 2`` with the correction and
    ``1 - i dW`` without.
    """
    dW = np.asarray(dW, dtype=float)
    if not np.any(dW) and spec.convention == "stratonovich" and spec.ito_correction_on:
        return ComplexField(u.grid, u.values.copy())
    return ComplexField(u.grid, u.values * _noise_multiplier(dW, dt, spec, correction))


def step_count(t_start: float, t_end: float, dt: float) -> int:
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t_end > t_start:
        raise ValueError("t_end must exceed t_start")
    ratio = (t_end - t_start) / dt
    steps = int(round(ratio))
    if steps < 1 or abs(ratio - steps) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"dt={dt} does not divide the horizon [{t_start}, {t_end}]")
    return steps


def solve(u0: ComplexField, spec: EquationSpec, t_span=(0.0, 1.0), dt: float = 1e-3,
          noise: NoiseModel | None = None, seed: int | None = None, path: int = 0,
          increments: np.ndarray | None = None, stride: int = 1,
          blowup: BlowUpPolicy = BlowUpPolicy(), forcing=None) -> Trajectory:
    """Integrate from ``u0`` over ``t_span`` with fixed step ``dt``.

    Noise increments come from ``increments`` (shape ``(steps, n)``) when given,
    otherwise from ``noise`` keyed by ``(seed or noise.seed, path, step)``.
    ``forcing``, if given, is a callable ``(t) -> array`` added to the
    equation's right-hand side (``i u_t + u_xx = ... + e``); it is integrated
    with the midpoint rule inside the nonlinear substep.

    Raises :class:`BlowUpError` with the offending step index on overflow,
    NaN, or loss of spectral resolution.
    """
    t0, t1 = map(float, t_span)
    steps = step_count(t0, t1, dt)
    if stride < 1:
        raise ValueError("stride must be >= 1")
    grid = u0.grid
    if not np.all(np.isfinite(u0.values)):
        raise ValueError("initial data must be finite")

    record = None
    correction = None
    if spec.noise_on:
        if increments is None:
            if noise is None:
                raise ValueError("noise_on needs a NoiseModel or explicit increments")
            key_seed = noise.seed if seed is None else seed
            xi = np.stack([
                sample_coefficients(noise, dt, NoiseKey(key_seed, path, j)) for j in range(steps)
            ])
            record = (xi * noise.gammas) @ noise.basis
        else:
            record = np.asarray(increments, dtype=float)
            if record.shape != (steps, grid.n):
                raise ValueError(f"increments must have shape {(steps, grid.n)}")
        if noise is not None:
            correction = np.asarray(noise.correction)
        elif spec.convention == "ito" or not spec.ito_correction_on:
            raise ValueError("a NoiseModel is needed for the correction field")

    half = propagator(grid, dt / 2)
    hi_band = np.abs(grid.k) > 2.0 / 3.0 * grid.k_max
    n_snap = steps // stride + (1 if steps % stride else 0) + 1
    times = np.empty(n_snap)
    states = np.empty((n_snap, grid.n), dtype=complex)
    running_out = np.empty(n_snap)

    u = u0.values.astype(complex, copy=True)
    running = 0.0
    times[0], states[0], running_out[0] = t0, u, 0.0
    snap = 1
    dx = grid.dx
    for j in range(steps):
        t = t0 + j * dt
        theta = theta_factor(spec, running)
        absu = np.abs(u)
        peak = absu.max()
        if peak > 0:
            running += dt * peak**5 * (np.sum((absu / peak) ** 10) * dx) ** 0.5
        v = np.fft.ifft(half * np.fft.fft(u))
        if forcing is None:
            v = _nonlinear_phase(v, spec, theta, dt)
        else:
            v = _forced_substep(v, spec, theta, dt, forcing, t, grid, half)
        if record is not None:
            v = v * _noise_multiplier(record[j], dt, spec, correction)
        v_hat = half * np.fft.fft(v)
        u = np.fft.ifft(v_hat)

        peak = np.abs(u).max()
        if not np.isfinite(peak):
            raise BlowUpError(j + 1, t + dt, "non-finite values")
        if peak > blowup.max_amplitude:
            raise BlowUpError(j + 1, t + dt, f"sup|u| = {peak:.3g}")
        power = np.abs(v_hat) ** 2
        tail = power[hi_band].sum() / power.sum() if peak > 0 else 0.0
        if tail > blowup.max_spectral_tail:
            raise BlowUpError(j + 1, t + dt, f"spectral tail {tail:.3g} (resolution lost)")

        if (j + 1) % stride == 0 or j + 1 == steps:
            times[snap] = t0 + (j + 1) * dt
            states[snap] = u
            running_out[snap] = running
            snap += 1
    return Trajectory(grid, times, states, running_out, dt, stride, record, spec)


def _forced_substep(v, spec, theta, dt, forcing, t, grid, half):
    # v_t = -i (theta N(v) + e(t)), advanced with the explicit midpoint rule;
    # the forcing is sampled at mid-step, where v currently lives
    e_mid = np.asarray(forcing(t + dt / 2), dtype=complex)
    if not np.any(e_mid):
        return _nonlinear_phase(v, spec, theta, dt)

    def rhs(w):
        return -1j * (nonlinearity_values(w, spec, theta) + e_mid)

    k1 = rhs(v)
    return v + dt * rhs(v + 0.5 * dt * k1)


def mass_drift(traj: Trajectory) -> np.ndarray:
    """Relative change of the L2 norm at every snapshot."""
    norms = np.sqrt(np.sum(np.abs(traj.states) ** 2, axis=1) * traj.grid.dx)
    if norms[0] == 0:
        return np.zeros_like(norms)
    return np.abs(norms - norms[0]) / norms[0]


def _trapezoid_weights(times: np.ndarray) -> np.ndarray:
    w = np.zeros_like(times)
    d = np.diff(times)
    w[:-1] += d / 2
    w[1:] += d / 2
    return w


def duhamel_residual(traj: Trajectory, spec: EquationSpec | None = None,
                     noise: NoiseModel | None = None, quadrature: str = "left") -> float:
    """L2 norm at the final time of

        u(T) - S(T)u0 + i int S(T-s) N(u) ds + i int S(T-s) u dW
             + 1/2 int S(T-s) F u ds

    with trapezoid quadrature in time for the drift integrals and the
    left-point (Ito) sum over recorded increments for the stochastic one.
    The correction integral is dropped for the uncorrected equation.

    ``quadrature="milstein"`` adds the Milstein term
    ``-i u_k (dW_k^2 - F dt) / 2`` to each left-point summand. The plain
    left-point sum converges only like ``dt^(1/2)`` even for an exact
    solution, which hides the integrator's own error.
    """
    if quadrature not in ("left", "milstein"):
        raise ValueError(f"unknown quadrature {quadrature!r}")
    spec = spec or traj.spec
    if spec is None:
        raise ValueError("equation spec required")
    grid = traj.grid
    times = traj.times
    T = times[-1]
    phases = np.exp(-1j * np.outer(T - times, grid.k**2))

    thetas = np.array([theta_factor(spec, r) for r in traj.running])
    drift = thetas[:, None] * spec.sign * spec.c * _power(np.abs(traj.states), spec.epsilon) \
        * traj.states
    if spec.noise_on and spec.ito_correction_on:
        if noise is None:
            raise ValueError("noise model needed for the correction integral")
        # -i * (1/2) F u moves into the same -i int S(T-s)(...) ds slot
        drift = drift - 0.5j * noise.correction * traj.states
    w = _trapezoid_weights(times)
    total_hat = np.fft.fft(traj.states[-1]) - phases[0] * np.fft.fft(traj.states[0])
    total_hat = total_hat + 1j * np.sum(w[:, None] * phases * np.fft.fft(drift, axis=1), axis=0)

    if spec.noise_on:
        if traj.noise_record is None:
            raise ValueError("trajectory carries no noise record")
        if traj.stride != 1:
            raise ValueError("the stochastic integral needs every step stored (stride 1)")
        prod = traj.states[:-1] * traj.noise_record
        if quadrature == "milstein":
            if noise is None:
                raise ValueError("noise model needed for the Milstein term")
            qv = traj.noise_record**2 - traj.dt * noise.correction
            prod = prod - 0.5j * traj.states[:-1] * qv
        total_hat = total_hat + 1j * np.sum(phases[:-1] * np.fft.fft(prod, axis=1), axis=0)
    res = np.fft.ifft(total_hat)
    return float(np.sqrt(np.sum(np.abs(res) ** 2) * grid.dx))


def x2_running(traj: Trajectory) -> np.ndarray:
    """Recompute ``||u||_{X2(t0, t)}^5`` from snapshots (left-endpoint rule)."""
    vals = lp_norms_batch(traj.states, 10, traj.grid) ** 5
    out = np.zeros(len(traj))
    out[1:] = np.cumsum(vals[:-1] * np.diff(traj.times))
    return out
