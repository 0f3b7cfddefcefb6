import math

import numpy as np
import pytest
from scipy import integrate

from snls.grid import make_grid
from snls.noise import (
    NoiseKey,
    UnresolvedError,
    WeightedSpaceParams,
    build_noise,
    correction_invariance_check,
    h_norm,
    hermite_functions,
    sample_increment,
    sample_path,
)
from snls.spectral import ComplexField


def test_hermite_orthonormal():
    g = make_grid(16, 512)
    B = hermite_functions(g.x, 20)
    gram = B @ B.T * g.dx
    assert np.abs(gram - np.eye(20)).max() < 1e-12


def test_h_norm_zero():
    g = make_grid(16, 128)
    assert h_norm(ComplexField(g, g.zeros())) == 0.0


def test_h_norm_unit_wavenumber():
    g = make_grid(math.pi, 64)
    f = ComplexField(g, np.exp(1j * g.x))
    p = WeightedSpaceParams(K=0, N=1)
    # weight 1 + |x|^0 = 2
    assert h_norm(f, p) == pytest.approx(2 * math.sqrt(2 * math.pi), rel=1e-13)


def test_h_norm_quadrature_oracle():
    g = make_grid(16, 512)
    f = ComplexField(g, np.exp(-g.x**2 / 2).astype(complex))
    p = WeightedSpaceParams(K=2, N=1)
    val, _ = integrate.quad(lambda x: ((1 + x * x) * x * math.exp(-x * x / 2)) ** 2,
                            -40, 40, epsabs=1e-13, epsrel=1e-13, limit=200)
    assert abs(h_norm(f, p) - math.sqrt(val)) < 1e-8


def test_h_norm_unresolved():
    g = make_grid(16, 64)
    f = ComplexField(g, np.exp(-20 * g.x**2).astype(complex))
    with pytest.raises(UnresolvedError):
        h_norm(f, WeightedSpaceParams(K=2, N=4))


def test_single_mode_correction():
    g = make_grid(16, 256)
    m = build_noise(1, 1.7, 2.0, g)
    expect = 1.7**2 * np.exp(-g.x**2) / math.sqrt(math.pi)
    assert np.abs(m.correction - expect).max() < 1e-14


def test_zero_noise():
    g = make_grid(16, 128)
    m = build_noise(8, 0.0, 2.0, g)
    assert m.is_zero
    assert not np.any(m.correction)
    assert not np.any(sample_increment(m, 0.01, NoiseKey(3, 1, 2)))


def test_trace_identity():
    g = make_grid(16, 256)
    m = build_noise(16, 1.0, 3.0, g)
    assert abs(m.correction.sum() * g.dx - np.sum(m.gammas**2)) < 1e-8


def test_decay_law():
    g = make_grid(16, 256)
    m = build_noise(5, 2.0, 1.5, g)
    assert np.allclose(m.gammas, 2.0 * (1.0 + np.arange(5)) ** -1.5)


@pytest.mark.parametrize("kw", [dict(M=0), dict(gamma0=-1.0), dict(s=0.0)])
def test_build_preconditions(kw):
    args = dict(M=4, gamma0=1.0, s=2.0)
    args.update(kw)
    with pytest.raises(ValueError):
        build_noise(args["M"], args["gamma0"], args["s"], make_grid(16, 256))


def test_build_rejects_unresolved_modes():
    with pytest.raises(ValueError):
        build_noise(64, 1.0, 2.0, make_grid(4, 64))


def test_rotation_zero_angle():
    m = build_noise(4, 1.0, 2.0, make_grid(16, 256))
    equal = type(m)(m.grid, np.array([1.0, 1.0, 0.3, 0.1]), m.basis,
                    (np.array([1.0, 1.0, 0.3, 0.1])[:, None] ** 2 * m.basis**2).sum(0))
    assert correction_invariance_check(equal, 0.0) == 0.0


def test_rotation_quarter_turn():
    g = make_grid(16, 256)
    m = build_noise(4, 1.0, 2.0, g)
    gam = np.array([1.0, 1.0, 0.5, 0.25])
    equal = type(m)(g, gam, m.basis, (gam[:, None] ** 2 * m.basis**2).sum(0))
    assert correction_invariance_check(equal, math.pi / 4) < 1e-12


def test_rotation_needs_equal_gammas():
    m = build_noise(4, 1.0, 2.0, make_grid(16, 256))
    with pytest.raises(ValueError):
        correction_invariance_check(m, 0.3)


def test_increments_reproducible_and_keyed():
    m = build_noise(8, 1.0, 2.0, make_grid(16, 128))
    a = sample_increment(m, 0.01, NoiseKey(5, 2, 9))
    b = sample_increment(m, 0.01, NoiseKey(5, 2, 9))
    c = sample_increment(m, 0.01, NoiseKey(5, 2, 10))
    d = sample_increment(m, 0.01, NoiseKey(5, 3, 9))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)


def test_path_matches_single_steps():
    m = build_noise(8, 1.0, 2.0, make_grid(16, 128))
    p = sample_path(m, 0.01, 5, seed=4, path=1, start_step=3)
    for j in range(5):
        assert np.allclose(p[j], sample_increment(m, 0.01, NoiseKey(4, 1, 3 + j)), rtol=0, atol=1e-15)


def test_pointwise_variance():
    g = make_grid(16, 128)
    m = build_noise(16, 1.0, 3.0, g)
    dt = 0.01
    S = 10_000
    dW = sample_path(m, dt, S, seed=11)
    var = np.mean(dW**2, axis=0)
    se = np.std(dW**2, axis=0, ddof=1) / math.sqrt(S)
    expect = dt * m.correction
    assert np.all(np.abs(var - expect) <= 3 * se + 1e-30)


def test_disjoint_steps_uncorrelated():
    g = make_grid(16, 128)
    m = build_noise(1, 1.0, 3.0, g)
    S = 10_000
    p = sample_path(m, 0.01, 2 * S, seed=2).reshape(S, 2, -1)
    a, b = p[:, 0, 64], p[:, 1, 64]
    r = np.corrcoef(a, b)[0, 1]
    assert abs(r) < 3 / math.sqrt(S)
