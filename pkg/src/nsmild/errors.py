"""Exception and warning types shared across the package."""


class NsmildError(Exception):
    """Base class for all package errors."""


class DomainError(NsmildError, ValueError):
    """An argument lies outside the range an operation is defined on."""


class InvalidFieldError(NsmildError, ValueError):
    """A field holds non-finite samples or has an inconsistent shape."""


class SymmetryError(NsmildError, ValueError):
    """Spectral coefficients are not Hermitian, so the field is not real."""


class GeometryError(NsmildError, ValueError):
    """The requested construction does not fit inside the periodic box."""


class NonConvergenceError(NsmildError, RuntimeError):
    """A fixed-point iteration failed to contract within its budget."""

    def __init__(self, message, last_residual):
        super().__init__(f"{message} (last residual {last_residual:.3e})")
        self.last_residual = last_residual


class QuadratureError(NsmildError, RuntimeError):
    """An adaptive quadrature could not reach the requested tolerance."""

    def __init__(self, message, achieved_error):
        super().__init__(f"{message} (achieved error {achieved_error:.3e})")
        self.achieved_error = achieved_error


class FitError(NsmildError, ValueError):
    """Too few usable points for a regression."""


class ResolutionWarning(UserWarning):
    """The spectral tail holds a significant share of the enstrophy."""


class SolenoidalWarning(UserWarning):
    """A field expected to be divergence-free is not."""


class BoundaryMassWarning(UserWarning):
    """A field carries noticeable L2 mass outside the central half-box."""
