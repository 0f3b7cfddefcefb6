import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snls.dynamics import EquationSpec, solve
from snls.functionals import x_norms
from snls.grid import l2_norm, make_grid
from snls.profiles import gaussian
from snls.spectral import ComplexField, free_propagate
from snls.symmetry import (
    SymmetryElement,
    SymmetryRangeError,
    apply_group,
    orthogonality_gap,
    spacetime_deform,
)


def test_identity_element(grid256):
    f = gaussian(grid256, 1.0, velocity=1.0)
    assert np.array_equal(apply_group(SymmetryElement(), f).values, f.values)


def test_closed_form_dilation():
    g = make_grid(16, 512)
    f = ComplexField(g, np.exp(-g.x**2 / 2).astype(complex))
    out = apply_group(SymmetryElement(lambda0=2.0), f)
    expect = 2**-0.5 * np.exp(-g.x**2 / 8)
    assert np.abs(out.values - expect).max() < 1e-8


def test_translation_and_boost():
    g = make_grid(16, 512)
    f = ComplexField(g, np.exp(-g.x**2 / 2).astype(complex))
    out = apply_group(SymmetryElement(x0=1.5, xi0=2.0), f)
    expect = np.exp(2j * g.x) * np.exp(-(g.x - 1.5) ** 2 / 2)
    assert np.abs(out.values - expect).max() < 1e-10


def test_time_component_is_backward_flow():
    g = make_grid(16, 256)
    f = gaussian(g, 1.0)
    out = apply_group(SymmetryElement(t0=0.5), f)
    assert np.abs(out.values - free_propagate(f, -0.5).values).max() < 1e-12


@settings(max_examples=25, deadline=None)
@given(
    st.floats(-2.0, 2.0),
    st.floats(-2.0, 2.0),
    st.floats(0.5, 2.0),
    st.floats(-0.5, 0.5),
)
def test_unitary(x0, xi0, lam, t0):
    g = make_grid(24, 512)
    f = gaussian(g, 1.0, width=1.0)
    out = apply_group(SymmetryElement(x0, xi0, lam, t0), f)
    assert abs(l2_norm(out) - l2_norm(f)) < 1e-10


def test_out_of_range_lambda(grid256):
    with pytest.raises(SymmetryRangeError):
        apply_group(SymmetryElement(lambda0=20.0), gaussian(grid256))


def test_support_violation(grid256):
    with pytest.raises(SymmetryRangeError):
        apply_group(SymmetryElement(lambda0=6.0), gaussian(grid256, width=1.0))


def test_spectral_violation():
    g = make_grid(16, 128)
    with pytest.raises(SymmetryRangeError):
        apply_group(SymmetryElement(lambda0=0.125), gaussian(g, width=0.5))


def test_deform_identity(grid128):
    tr = solve(gaussian(grid128), EquationSpec(c=0.0), (0, 0.1), 0.01)
    out = spacetime_deform(tr, SymmetryElement())
    assert np.array_equal(out.states, tr.states)
    assert np.array_equal(out.times, tr.times)


def test_deform_pure_time_shift(grid128):
    tr = solve(gaussian(grid128), EquationSpec(c=0.0), (0, 0.1), 0.01)
    out = spacetime_deform(tr, SymmetryElement(t0=2.0))
    assert np.allclose(out.times, tr.times + 2.0, atol=1e-15)
    assert np.abs(out.states - tr.states).max() < 1e-12


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_deform_preserves_x2(lam):
    g = make_grid(24, 1024)
    T = 0.5
    tr = solve(gaussian(g, 1.0), EquationSpec(c=0.0), (0, T), 1e-3, stride=10)
    out = spacetime_deform(tr, SymmetryElement(x0=0.5, xi0=0.3, lambda0=lam))
    a = x_norms(tr)[1]
    b = x_norms(out)[1]
    assert abs(a - b) / a < 0.01


def test_deformed_linear_solution_solves_linear_equation():
    g = make_grid(24, 512)
    tr = solve(gaussian(g, 1.0), EquationSpec(c=0.0), (0, 0.2), 1e-2)
    out = spacetime_deform(tr, SymmetryElement(x0=0.3, xi0=0.5, lambda0=1.5))
    for j in range(1, len(out)):
        step = free_propagate(out.field(j - 1), out.times[j] - out.times[j - 1])
        assert np.abs(step.values - out.states[j]).max() < 1e-8


def test_deform_horizon_guard(grid128):
    tr = solve(gaussian(grid128), EquationSpec(c=0.0), (0, 0.1), 0.01)
    with pytest.raises(SymmetryRangeError):
        spacetime_deform(tr, SymmetryElement(lambda0=2.0), horizon=(0.0, 0.2))


def test_gap_identical():
    g = SymmetryElement(1.0, 2.0, 3.0, 4.0)
    assert orthogonality_gap(g, g) == 2.0


def test_gap_scales():
    assert orthogonality_gap(SymmetryElement(lambda0=2.0), SymmetryElement(lambda0=0.5)) == 4.25


def test_gap_translation():
    assert orthogonality_gap(SymmetryElement(x0=10.0), SymmetryElement()) == 12.0


def test_gap_symmetric_in_identical_scale():
    a = SymmetryElement(1.0, 0.5, 1.0, 0.2)
    b = SymmetryElement(-1.0, 0.0, 1.0, 0.0)
    assert math.isclose(orthogonality_gap(a, b), orthogonality_gap(b, a))
