"""Collective decay rates and dipole-dipole shifts of two-level atoms with
quantized center-of-mass motion, and the resulting master equation."""

from .coefficients import (
    CoefficientSet,
    Cutoff,
    build_coefficient_set,
    delta_regularized,
    gamma_fock_smallxi,
    gamma_gaussian_closed,
    gamma_gaussian_smallxi,
    gamma_indistinguishable,
    gamma_quadrature,
)
from .correlation import correlation_evaluator
from .exceptions import (
    CapacityError,
    ConfigError,
    ConsistencyError,
    DivergenceError,
    DomainError,
    MotionalDipolesError,
    PauliViolationError,
    PrecisionError,
    StiffnessError,
    UnsupportedOverlapError,
)
from .lindblad import MasterEquation, Trajectory, evolve, lindblad_rhs, observables
from .motional_states import Ensemble, Fock, Gaussian, PointLike, Statistics, Thermal, overlap
from .transition_geometry import (
    AngularFactors,
    TransitionKind,
    TransitionSpec,
    angular_factors,
    classical_delta,
    classical_gamma,
)

__version__ = "0.1.0"
