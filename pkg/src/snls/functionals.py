"""Space-time norms of trajectories, the stochastic-convolution maximal
function with its time dissection, and Monte-Carlo moment estimators."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory
from .grid import lp_norms_batch
from .noise import NoiseKey, NoiseModel, sample_coefficients


@dataclass(frozen=True)
class EnsembleStats:
    rho: float
    sample_count: int
    estimate: float
    std_error: float
    quantity: str = "x_norm"
    window: tuple[float, float] = (0.0, 1.0)


def x_norms(traj: Trajectory, a: float | None = None, b: float | None = None) -> tuple[float, float]:
    """``(||u||_{L^inf_t L^2_x}, ||u||_{L^5_t L^10_x})`` over stored times in ``[a, b]``.

    The first is a max over snapshots; the second uses the trapezoid rule.
    """
    a = traj.times[0] if a is None else a
    b = traj.times[-1] if b is None else b
    idx = traj.window(a, b)
    if idx.size == 0 or b < a:
        raise ValueError(f"no stored times in window [{a}, {b}]")
    states = traj.states[idx]
    x1 = float(np.sqrt(np.max(np.sum(np.abs(states) ** 2, axis=1)) * traj.grid.dx))
    if idx.size == 1:
        return x1, 0.0
    l10 = lp_norms_batch(states, 10, traj.grid)
    x2 = float(np.trapezoid(l10**5, traj.times[idx]) ** 0.2)
    return x1, x2


def x_norm(traj: Trajectory, a: float | None = None, b: float | None = None) -> float:
    x1, x2 = x_norms(traj, a, b)
    return x1 + x2


def _require_noise(traj: Trajectory):
    if traj.noise_record is None:
        raise ValueError("trajectory has no noise record")
    if traj.stride != 1:
        raise ValueError("maximal function needs every step stored (stride 1)")


def _convolution_prefix(traj: Trajectory) -> np.ndarray:
    """Prefix sums ``Q_b = sum_{i<b} e^{i k^2 t_i} FFT(u_i dW_i)``.

    Then ``sum_{a<=i<b} S(t - t_i) u_i dW_i = IFFT(e^{-i k^2 t} (Q_b - Q_a))``.
    """
    k2 = traj.grid.k**2
    terms = np.fft.fft(traj.states[:-1] * traj.noise_record, axis=1)
    terms *= np.exp(1j * np.outer(traj.times[:-1], k2))
    prefix = np.zeros((len(traj), traj.grid.n), dtype=complex)
    np.cumsum(terms, axis=0, out=prefix[1:])
    return prefix


def _max_pair_norm(prefix: np.ndarray, j: int, t: float, traj: Trajectory,
                   chunk: int = 4096) -> float:
    grid = traj.grid
    phase = np.exp(-1j * grid.k**2 * t)
    ia, ib = np.triu_indices(j + 1, k=1)
    best = 0.0
    for s in range(0, ia.size, chunk):
        diff = (prefix[ib[s:s + chunk]] - prefix[ia[s:s + chunk]]) * phase
        vals = lp_norms_batch(np.fft.ifft(diff, axis=1), 10, grid)
        best = max(best, float(vals.max()))
    return best


def _stored_index(traj: Trajectory, t: float) -> int:
    j = int(np.argmin(np.abs(traj.times - t)))
    if abs(traj.times[j] - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"t={t} is not a stored time")
    return j


def maximal_function(traj: Trajectory, t: float, upto: float | None = None) -> float:
    """``M*(t)``: max over stored ``r1 <= r2 <= t`` of the L^10 norm of the
    left-point stochastic convolution ``sum S(t - s_i) u(s_i) dW_i``.

    ``upto`` caps ``r2`` below ``t`` while keeping the propagation to ``t``;
    for fixed ``t`` the result is non-decreasing in ``upto``. ``M*(t)`` itself
    need not be monotone in ``t``, since ``S(t - s)`` moves with ``t``.
    """
    _require_noise(traj)
    j = _stored_index(traj, t)
    r = j if upto is None else _stored_index(traj, upto)
    if r > j:
        raise ValueError("upto must not exceed t")
    if r == 0:
        return 0.0
    return _max_pair_norm(_convolution_prefix(traj), r, traj.times[j], traj)


def maximal_function_path(traj: Trajectory) -> np.ndarray:
    """``M*`` at every stored time, sharing the prefix sums."""
    _require_noise(traj)
    prefix = _convolution_prefix(traj)
    out = np.zeros(len(traj))
    for j in range(1, len(traj)):
        out[j] = _max_pair_norm(prefix, j, traj.times[j], traj)
    return out


def maximal_function_bruteforce(traj: Trajectory, t_index: int) -> float:
    """Reference ``M*`` by direct summation over every pair (small inputs only)."""
    _require_noise(traj)
    grid = traj.grid
    t = traj.times[t_index]
    best = 0.0
    for a in range(t_index + 1):
        for b in range(a, t_index + 1):
            acc = np.zeros(grid.n, dtype=complex)
            for i in range(a, b):
                g = traj.states[i] * traj.noise_record[i]
                acc += np.fft.ifft(np.exp(-1j * grid.k**2 * (t - traj.times[i])) * np.fft.fft(g))
            best = max(best, float(lp_norms_batch(acc[None], 10, grid)[0]))
    return best


def random_dissection(times, mstar, eta: float, T0: float | None = None) -> list[float]:
    """Cut times ``0 = tau_0 < ... < tau_K = T0`` with ``int |M*|^5 = eta/2``
    on every interval but the last.

    ``mstar`` holds samples at ``times`` (or is a callable). The integrand is
    integrated with the trapezoid rule and crossings are located by linear
    interpolation of the cumulative integral.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    times = np.asarray(times, dtype=float)
    vals = np.asarray(mstar(times) if callable(mstar) else mstar, dtype=float)
    if T0 is None:
        T0 = float(times[-1])
    keep = times <= T0 + 1e-12
    times, vals = times[keep], vals[keep]
    f = np.abs(vals) ** 5
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(times))])
    target = eta / 2.0
    cuts = [float(times[0])]
    base = 0.0
    slack = 1e-12 * max(1.0, abs(T0))
    while True:
        level = base + target
        j = int(np.searchsorted(cum, level * (1 - 1e-12), side="left"))
        if j >= len(cum):
            break
        if j == 0:
            tau = float(times[0])
        else:
            c0, c1 = cum[j - 1], cum[j]
            frac = 1.0 if c1 == c0 else min(1.0, max(0.0, (level - c0) / (c1 - c0)))
            tau = float(times[j - 1] + frac * (times[j] - times[j - 1]))
        if tau >= T0 - slack:
            break
        cuts.append(tau)
        base = level
    cuts.append(float(T0))
    return cuts


def dissection_bound(times, mstar, eta: float) -> float:
    """Allowed interval count ``1 + (2/eta) int |M*|^5 + 1`` (the last +1 is grid slack)."""
    times = np.asarray(times, dtype=float)
    f = np.abs(np.asarray(mstar, dtype=float)) ** 5
    return 2.0 + (2.0 / eta) * float(np.trapezoid(f, times))


def _jackknife_power_mean(values: np.ndarray, rho: float) -> tuple[float, float]:
    p = values**rho
    n = p.size
    est = float(np.mean(p) ** (1.0 / rho))
    if n < 2:
        return est, 0.0
    loo = ((p.sum() - p) / (n - 1)) ** (1.0 / rho)
    se = float(np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))
    return est, se


def ensemble_moment(trajs, rho: float, window: tuple[float, float] | None = None,
                    quantity: str = "x_norm", allow_single: bool = False) -> EnsembleStats:
    """``(E ||u||^rho)^(1/rho)`` with a jackknife standard error.

    ``quantity`` is ``"x_norm"`` (X1 + X2), ``"x1"`` or ``"x2"``.
    """
    if rho < 1:
        raise ValueError("rho must be >= 1")
    trajs = list(trajs)
    if len(trajs) < (1 if allow_single else 2):
        raise ValueError("need at least two trajectories")
    ref = trajs[0]
    for tr in trajs[1:]:
        if tr.grid != ref.grid or tr.dt != ref.dt or tr.spec != ref.spec \
                or len(tr) != len(ref) or not np.allclose(tr.times, ref.times):
            raise ValueError("ensemble members are not identically configured")
    if window is None:
        window = (float(ref.times[0]), float(ref.times[-1]))
    vals = []
    for tr in trajs:
        x1, x2 = x_norms(tr, *window)
        vals.append({"x_norm": x1 + x2, "x1": x1, "x2": x2}[quantity])
    est, se = _jackknife_power_mean(np.asarray(vals), rho)
    return EnsembleStats(float(rho), len(trajs), est, se, quantity, tuple(map(float, window)))


def moment_from_values(values, rho: float, quantity: str = "x_norm",
                       window=(0.0, 1.0)) -> EnsembleStats:
    if rho < 1:
        raise ValueError("rho must be >= 1")
    est, se = _jackknife_power_mean(np.asarray(values, dtype=float), rho)
    return EnsembleStats(float(rho), len(values), est, se, quantity, tuple(window))


@dataclass(frozen=True)
class BurkholderResult:
    ratio: float
    lhs: float
    rhs: float
    degenerate: bool = False


def burkholder_check(sigma: Trajectory, model: NoiseModel, p: float = 2.0, rho: float = 2.0,
                     samples: int = 1000, seed: int = 0) -> BurkholderResult:
    """Monte-Carlo ratio of the two sides of the Burkholder inequality.

    Left: ``E sup_t ||sum_{s_i < t} sigma(s_i) dW_i||_{L^p}^rho`` over
    ``samples`` independent noise paths. Right:
    ``(int_0^T sum_k ||sigma(s) Phi e_k||_{L^p}^2 ds)^(rho/2)``, the mode-sum
    stand-in for the radonifying norm (``sigma`` is deterministic here).
    A zero integrand returns ratio 0 with ``degenerate=True``.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    if rho < 1:
        raise ValueError("rho must be >= 1")
    grid = sigma.grid
    times = sigma.times
    dts = np.diff(times)
    states = sigma.states[:-1]
    modes = model.modes
    sq = np.array([
        np.sum(lp_norms_batch(s[None, :] * modes, p, grid) ** 2) for s in states
    ])
    rhs = float(np.sum(sq * dts) ** (rho / 2))
    if rhs == 0.0:
        return BurkholderResult(0.0, 0.0, 0.0, True)
    lhs_samples = np.empty(samples)
    for j in range(samples):
        xi = np.stack([
            sample_coefficients(model, dt, NoiseKey(seed, j, i)) for i, dt in enumerate(dts)
        ])
        dW = (xi * model.gammas) @ model.basis
        partial = np.cumsum(states * dW, axis=0)
        lhs_samples[j] = lp_norms_batch(partial, p, grid).max() ** rho
    lhs = float(lhs_samples.mean())
    return BurkholderResult(lhs / rhs, lhs, rhs, False)


def write_stats_csv(path, rows) -> None:
    """Rows of ``(quantity, window, value, std_error)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["quantity", "window", "value", "std_error"])
        for q, win, val, se in rows:
            if not isinstance(win, str):
                win = f"{win[0]!r}:{win[1]!r}"
            w.writerow([q, win, repr(float(val)), repr(float(se))])
