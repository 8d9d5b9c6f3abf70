"""Exception hierarchy shared by every module of the package."""


class MotionalDipolesError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(MotionalDipolesError, ValueError):
    """An argument lies outside the domain of the operation."""


class DivergenceError(DomainError):
    """The requested quantity is singular at the given point."""


class CapacityError(MotionalDipolesError, ValueError):
    """A size guard was exceeded (factorial overflow, permutation count, ...)."""


class PrecisionError(MotionalDipolesError, ArithmeticError):
    """A numerical procedure could not reach its accuracy target.

    ``partial`` carries the best available estimate.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class UnsupportedOverlapError(MotionalDipolesError, NotImplementedError):
    """No closed form is available for the requested pair of motional states."""


class PauliViolationError(MotionalDipolesError, ValueError):
    """An (anti)symmetrized state has a vanishing normalization."""


class ConsistencyError(MotionalDipolesError, ArithmeticError):
    """A numerical self-consistency check failed."""


class StiffnessError(MotionalDipolesError, RuntimeError):
    """The ODE integrator could not advance (step-size underflow)."""


class ConfigError(MotionalDipolesError, ValueError):
    """A run configuration failed validation."""
