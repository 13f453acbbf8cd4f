"""Mild-form Navier-Stokes toolkit on a periodic box: spectral fields and
operators, an exponential time stepper, weak-form and Kato-approximation
checks, the radial kernel quadrature engine and regularity estimates."""

from .errors import (
    BoundaryMassWarning,
    DomainError,
    FitError,
    GeometryError,
    InvalidFieldError,
    NonConvergenceError,
    NsmildError,
    QuadratureError,
    ResolutionWarning,
    SolenoidalWarning,
    SymmetryError,
)
from .field_core import GridSpec, SpectralField, Trajectory, VectorField

__all__ = [
    "BoundaryMassWarning",
    "DomainError",
    "FitError",
    "GeometryError",
    "GridSpec",
    "InvalidFieldError",
    "NonConvergenceError",
    "NsmildError",
    "QuadratureError",
    "ResolutionWarning",
    "SolenoidalWarning",
    "SpectralField",
    "SymmetryError",
    "Trajectory",
    "VectorField",
]

__version__ = "0.1.0"
