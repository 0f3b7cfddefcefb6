"""Split-step spectral simulation of a truncated stochastic quintic NLS on a
periodic interval, with the norms, noise models and numerical studies built
around it."""

from .dynamics import (
    DEFOCUSING,
    FOCUSING,
    BlowUpError,
    BlowUpPolicy,
    EquationSpec,
    Trajectory,
    duhamel_residual,
    mass_drift,
    solve,
)
from .grid import Grid1D, l2_norm, lp_norm, make_grid
from .noise import NoiseModel, build_noise, sample_increment
from .spectral import ComplexField, free_propagate

__version__ = "0.1.0"

__all__ = [
    "DEFOCUSING",
    "FOCUSING",
    "BlowUpError",
    "BlowUpPolicy",
    "ComplexField",
    "EquationSpec",
    "Grid1D",
    "NoiseModel",
    "Trajectory",
    "build_noise",
    "duhamel_residual",
    "free_propagate",
    "l2_norm",
    "lp_norm",
    "make_grid",
    "mass_drift",
    "sample_increment",
    "solve",
]
