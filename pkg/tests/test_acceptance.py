"""End-to-end acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, echoed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from snls.dynamics import (
    FOCUSING,
    BlowUpPolicy,
    EquationSpec,
    duhamel_residual,
    mass_drift,
    solve,
)
from snls.experiments import mass_growth_no_correction, run_ensemble, subcritical_limit, uniform_bound_sweep
from snls.functionals import dissection_bound, maximal_function_path, random_dissection, x_norms
from snls.grid import l2_norm, make_grid
from snls.noise import NoiseModel, build_noise, correction_field, correction_invariance_check, sample_path
from snls.profiles import GROUND_STATE_MASS, gaussian, ground_state, ground_state_residual
from snls.spectral import ComplexField, dispersive_decay_fit
from snls.symmetry import SymmetryElement, spacetime_deform

pytestmark = pytest.mark.acceptance


def test_01_pathwise_mass_conservation(acceptance):
    start = time.perf_counter()
    g = make_grid(16, 256)
    noise = build_noise(16, 1.0, 3.0, g, seed=1)
    tr = solve(gaussian(g, 1.0), EquationSpec(noise_on=True), (0.0, 1.0), 1e-3, noise=noise)
    drift = float(mass_drift(tr).max())
    elapsed = time.perf_counter() - start
    ok = drift < 1e-10 and elapsed < 10
    acceptance(1, "pathwise mass conservation", ok,
               f"max relative drift {drift:.2e} (< 1e-10) over {len(tr)} snapshots, {elapsed:.1f}s (< 10s)")
    assert ok


def test_02_soliton(acceptance):
    start = time.perf_counter()
    g = make_grid(16, 512)
    q = ground_state(g)
    spec = EquationSpec(sign=FOCUSING)
    dts = [4e-4, 2e-4, 1e-4]
    errs = []
    for dt in dts:
        tr = solve(q, spec, (0.0, 1.0), dt, stride=round(1 / dt))
        errs.append(l2_norm(tr.final.values - np.exp(1j) * q.values, g))
    order = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])
    elapsed = time.perf_counter() - start
    ok = errs[-1] < 1e-4 and abs(order - 2.0) <= 0.2 and elapsed < 60
    acceptance(2, "soliton oracle", ok,
               f"L2 error at t=1 {errs[-1]:.2e} (< 1e-4), order {order:.3f} (2 +- 0.2), {elapsed:.1f}s (< 60s)")
    assert ok


def test_03_ground_state_constants(acceptance):
    g = make_grid(16, 2048)
    res = ground_state_residual(g)
    mass = l2_norm(ground_state(g)) ** 2
    ok = res < 1e-8 and abs(mass - math.sqrt(3) * math.pi / 2) < 1e-6
    acceptance(3, "ground-state constants", ok,
               f"residual {res:.2e} (< 1e-8), |mass - sqrt3 pi/2| {abs(mass - GROUND_STATE_MASS):.2e} (< 1e-6)")
    assert ok


def test_04_dispersive_decay(acceptance):
    start = time.perf_counter()
    g = make_grid(64, 4096)
    slope = dispersive_decay_fit(gaussian(g, 1.0, width=1.0), [1.0, 2.0, 4.0, 8.0])
    elapsed = time.perf_counter() - start
    ok = abs(slope + 0.5) <= 0.03 and elapsed < 30
    acceptance(4, "dispersive decay", ok, f"slope {slope:.4f} (-0.5 +- 0.03), {elapsed:.2f}s (< 30s)")
    assert ok


def test_05_basis_invariance(acceptance):
    g = make_grid(16, 256)
    base = build_noise(8, 1.0, 2.0, g)
    gammas = np.array([1.0, 1.0, 0.6, 0.4, 0.3, 0.2, 0.1, 0.05])
    model = NoiseModel(g, gammas, base.basis, correction_field(gammas, base.basis))
    worst = max(correction_invariance_check(model, a) for a in np.linspace(0, 2 * math.pi, 17))
    ok = worst < 1e-12
    acceptance(5, "correction-field basis invariance", ok, f"max discrepancy {worst:.2e} (< 1e-12)")
    assert ok


def test_06_noise_covariance(acceptance):
    start = time.perf_counter()
    g = make_grid(16, 128)
    model = build_noise(16, 1.0, 3.0, g)
    dt, S = 0.01, 10_000
    dW = sample_path(model, dt, S, seed=11)
    var = np.mean(dW**2, axis=0)
    se = np.std(dW**2, axis=0, ddof=1) / math.sqrt(S)
    z = np.abs(var - dt * model.correction) / se
    elapsed = time.perf_counter() - start
    ok = bool(np.all(z <= 3.0)) and elapsed < 10
    acceptance(6, "noise covariance", ok,
               f"max |z| {z.max():.2f} over {g.n} points (<= 3), {S} samples, {elapsed:.2f}s (< 10s)")
    assert ok


def test_07_plateau_consistency(acceptance):
    g = make_grid(16, 256)
    u0 = gaussian(g, 0.2)
    noise = build_noise(8, 0.5, 3.0, g, seed=2)
    base = EquationSpec(noise_on=True)
    untrunc = solve(u0, base, (0, 1), 1e-3, noise=noise)
    m, A = 1.0, 0.1
    trunc = solve(u0, base.with_(m=m, A=A), (0, 1), 1e-3, noise=noise)
    peak = A + float(trunc.running.max())
    same = np.array_equal(untrunc.states, trunc.states)
    ok = peak <= m and same
    acceptance(7, "truncation plateau", ok,
               f"max A + ||u||_X2^5 = {peak:.3g} (<= m = {m}), bitwise identical: {same}")
    assert ok


def test_08_subcritical_limit(acceptance):
    start = time.perf_counter()
    rep = subcritical_limit(gaussian(make_grid(16, 256), 1.0), eps_list=(0.5, 0.25, 0.1, 0.05),
                            dt=1e-3, monotone_slack=0.0)
    diffs = [r[1] for r in rep.rows]
    strict = all(a > b for a, b in zip(diffs, diffs[1:]))
    elapsed = time.perf_counter() - start
    ok = strict and diffs[-1] < diffs[0] / 10 and elapsed < 120
    acceptance(8, "subcritical limit", ok,
               "diffs " + ", ".join(f"{d:.4g}" for d in diffs)
               + f"; first/last {diffs[0] / diffs[-1]:.2f} (> 10), {elapsed:.1f}s (< 120s)")
    assert ok


def test_09_bruteforce_oracle(acceptance):
    g = make_grid(math.pi, 8)
    u0 = ComplexField(g, (0.9 * np.exp(-g.x**2) + 0.3 * np.exp(1j * g.x)).astype(complex))
    k2 = g.k**2

    def rhs(_t, y):
        u = y[:8] + 1j * y[8:]
        du = 1j * np.fft.ifft(-k2 * np.fft.fft(u)) - 1j * np.abs(u) ** 4 * u
        return np.concatenate([du.real, du.imag])

    ref = solve_ivp(rhs, (0, 0.1), np.concatenate([u0.values.real, u0.values.imag]),
                    method="DOP853", rtol=1e-13, atol=1e-14)
    uref = ref.y[:8, -1] + 1j * ref.y[8:, -1]
    # eight points leave no spectral headroom, so the resolution guard is off
    tr = solve(u0, EquationSpec(), (0, 0.1), 1e-5, stride=10_000,
               blowup=BlowUpPolicy(max_spectral_tail=math.inf))
    err = l2_norm(tr.final.values - uref, g)
    ok = err < 1e-6
    acceptance(9, "n=8 direct-integrator oracle", ok, f"L2 error {err:.2e} (< 1e-6)")
    assert ok


def test_10_duhamel_residual(acceptance):
    g = make_grid(16, 128)
    u0 = gaussian(g, 1.2)
    det = [duhamel_residual(solve(u0, EquationSpec(), (0, 1), dt)) for dt in (0.01, 0.005, 0.0025)]
    ratios = [a / b for a, b in zip(det, det[1:])]

    noise = build_noise(8, 1.0, 3.0, g)
    spec = EquationSpec(noise_on=True)
    dts = [0.1 / 2**j for j in range(6)]
    fine_dt = dts[-1]
    paths = 16
    res = {"milstein": [], "left": []}
    for dt in dts:
        acc = {"milstein": [], "left": []}
        r = round(dt / fine_dt)
        for p in range(paths):
            fine = sample_path(noise, fine_dt, round(1 / fine_dt), seed=4, path=p)
            inc = fine.reshape(-1, r, g.n).sum(axis=1)
            tr = solve(gaussian(g, 1.0), spec, (0, 1), dt, noise=noise, increments=inc)
            for q in acc:
                acc[q].append(duhamel_residual(tr, noise=noise, quadrature=q) ** 2)
        for q in acc:
            res[q].append(math.sqrt(np.mean(acc[q])))
    order = float(np.polyfit(np.log(dts), np.log(res["milstein"]), 1)[0])
    left_order = float(np.polyfit(np.log(dts), np.log(res["left"]), 1)[0])
    left_decreasing = all(a > b for a, b in zip(res["left"], res["left"][1:]))
    ok = all(abs(x - 4) <= 0.5 for x in ratios) and order >= 0.5 and left_decreasing
    acceptance(10, "Duhamel residual", ok,
               "deterministic ratios " + ", ".join(f"{x:.3f}" for x in ratios)
               + f" (4 +- 0.5); stochastic order {order:.3f} (>= 0.5, Milstein quadrature); "
               f"left-point order {left_order:.3f} (info), left-point decreasing: {left_decreasing}")
    assert ok


def test_11_symmetry_invariance(acceptance):
    g = make_grid(24, 1024)
    tr = solve(gaussian(g, 1.0), EquationSpec(c=0.0), (0, 0.5), 1e-3, stride=5)
    base = x_norms(tr)[1]
    errs = {}
    for lam in (0.5, 2.0):
        out = spacetime_deform(tr, SymmetryElement(x0=0.5, xi0=0.3, lambda0=lam))
        errs[lam] = abs(x_norms(out)[1] - base) / base
    ok = max(errs.values()) < 0.01
    acceptance(11, "symmetry invariance", ok,
               ", ".join(f"lambda={k:g}: {v:.2e}" for k, v in errs.items()) + " (< 1%)")
    assert ok


def test_12_mass_growth(acceptance):
    start = time.perf_counter()
    rep = mass_growth_no_correction(T=1.0, paths=128, dt=1e-3, seed=0)
    elapsed = time.perf_counter() - start
    verdicts = {v.name: v for v in rep.verdicts}
    r2 = verdicts["log-mean-mass linear fit R^2"]
    twin = verdicts["Stratonovich twin rate"]
    ok = r2.passed and twin.passed and elapsed < 300
    acceptance(12, "mass growth without correction", ok,
               f"R^2 {r2.value:.4f} (> 0.9), Ito rate {rep.parameters['ito_rate']:.4f} "
               f"+- {rep.parameters['ito_rate_se']:.4f}, Stratonovich rate {twin.value:.2e} "
               f"({twin.tolerance}), 128 paths, {elapsed:.1f}s (< 300s)")
    assert ok


def test_13_dissection_bound(acceptance):
    g = make_grid(10, 64)
    noise = build_noise(4, 1.0, 3.0, g, seed=13)
    trajs = run_ensemble(gaussian(g, 1.0), EquationSpec(noise_on=True), noise, (0, 1), 0.02, 12, seed=13)
    worst = -math.inf
    checked = 0
    for tr in trajs:
        mstar = maximal_function_path(tr)
        for eta in (1e-4, 1e-3, 1e-2, 0.1):
            cuts = random_dissection(tr.times, mstar, eta)
            bound = dissection_bound(tr.times, mstar, eta)
            worst = max(worst, (len(cuts) - 1) - bound)
            checked += 1
    ok = worst <= 0
    acceptance(13, "dissection bound", ok,
               f"max(count - bound) = {worst:.3g} (<= 0) over {checked} path/eta pairs")
    assert ok


def test_14_uniform_sweep(acceptance):
    start = time.perf_counter()
    rep = uniform_bound_sweep(mass=2.0, m_list=(1.0, 10.0, math.inf), eps_list=(0.0, 0.25, 0.5, 1.0),
                              dt=1e-3, grid=make_grid(16, 256))
    vals = np.array([r[3] for r in rep.rows])
    spread = (vals.max() - vals.min()) / vals.mean()
    elapsed = time.perf_counter() - start
    ok = bool(np.all(np.isfinite(vals))) and spread < 0.5 and elapsed < 300
    acceptance(14, "uniform-in-eps sweep", ok,
               f"X2 in [{vals.min():.4f}, {vals.max():.4f}], spread {spread:.3f} (< 0.5), "
               f"{elapsed:.1f}s (< 300s)")
    assert ok
