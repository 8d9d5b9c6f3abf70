"""Single-atom motional states and their momentum-space overlap integrals.

Motion is quantized along the pair axis z' only.  Positions and widths are
dimensionless (``k0 * z`` and ``k0 * ell0``), so the width of a state is
directly its Lamb-Dicke parameter ``eta0``.

The overlap integral of two states is

    I_ab(kz) = int exp(i kz z) phi_a(z) conj(phi_b(z)) dz
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .exceptions import DomainError, PauliViolationError, UnsupportedOverlapError
from .special_functions import hermite, laguerre

__all__ = [
    "PointLike",
    "Gaussian",
    "Fock",
    "Thermal",
    "MotionalState",
    "Statistics",
    "Ensemble",
    "overlap",
    "position_overlap",
    "wavefunction",
    "gaussian_variance",
]


@dataclass(frozen=True)
class PointLike:
    """Atom at a fixed classical position."""

    z: float = 0.0


@dataclass(frozen=True)
class Gaussian:
    """Harmonic-oscillator ground state centered at ``z`` with width ``ell0``."""

    z: float = 0.0
    ell0: float = 1.0

    def __post_init__(self):
        if not self.ell0 > 0:
            raise DomainError("Gaussian width ell0 must be positive")


@dataclass(frozen=True)
class Fock:
    """Harmonic-oscillator eigenstate with ``n`` vibrational quanta."""

    n: int
    z: float = 0.0
    ell0: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise DomainError("Fock excitation number must be a non-negative integer")
        object.__setattr__(self, "n", int(self.n))
        if not self.ell0 > 0:
            raise DomainError("Fock width ell0 must be positive")


@dataclass(frozen=True)
class Thermal:
    """Thermal mixture of Fock states of a trap centered at the origin."""

    nbar: float
    ell0: float = 1.0

    def __post_init__(self):
        if not self.nbar >= 0:
            raise DomainError("mean phonon number must be >= 0")
        if not self.ell0 > 0:
            raise DomainError("thermal width ell0 must be positive")

    z = 0.0

    @property
    def effective_width(self) -> float:
        return self.ell0 * math.sqrt(2.0 * self.nbar + 1.0)


MotionalState = Union[PointLike, Gaussian, Fock, Thermal]


def _as_fock(s):
    """View Gaussian states as Fock ``n = 0`` states."""
    if isinstance(s, Gaussian):
        return Fock(0, s.z, s.ell0)
    return s


def gaussian_variance(s) -> float | None:
    """Position variance of a state whose density is Gaussian, else ``None``."""
    if isinstance(s, PointLike):
        return 0.0
    if isinstance(s, Gaussian) or (isinstance(s, Fock) and s.n == 0):
        return s.ell0**2
    if isinstance(s, Thermal):
        return s.effective_width**2
    return None


def overlap(a: MotionalState, b: MotionalState, kz):
    """Overlap integral ``I_ab(kz)``; vectorized over ``kz``."""
    kz = np.asarray(kz, dtype=float)
    if isinstance(a, PointLike) and isinstance(b, PointLike):
        if a.z != b.z:
            raise UnsupportedOverlapError("overlap of distinct point-like states is undefined")
        return np.exp(1j * kz * a.z)
    if isinstance(a, Thermal) and isinstance(b, Thermal):
        if a != b:
            raise UnsupportedOverlapError("thermal overlaps are only defined for identical states")
        return np.exp(-0.5 * (kz * a.effective_width) ** 2) + 0j
    fa, fb = _as_fock(a), _as_fock(b)
    if not (isinstance(fa, Fock) and isinstance(fb, Fock)):
        raise UnsupportedOverlapError(
            f"no overlap formula for {type(a).__name__} / {type(b).__name__}"
        )
    if fa.ell0 != fb.ell0:
        raise UnsupportedOverlapError("overlap requires equal widths")
    ell = fa.ell0
    if fa.n == 0 and fb.n == 0:
        return np.exp(-0.5 * kz * (kz * ell**2 - 1j * (fa.z + fb.z))) * math.exp(
            -((fa.z - fb.z) ** 2) / (8.0 * ell**2)
        )
    if fa.z != fb.z:
        raise UnsupportedOverlapError("Fock overlaps are only available for equal centers")
    n_lo, dn = min(fa.n, fb.n), abs(fa.n - fb.n)
    x = (kz * ell) ** 2
    norm = math.exp(0.5 * (math.lgamma(n_lo + 1) - math.lgamma(n_lo + dn + 1)))
    return (
        np.exp(1j * kz * fa.z)
        * np.exp(-0.5 * x)
        * norm
        * (1j * kz * ell) ** dn
        * laguerre(n_lo, dn, x)
    )


def position_overlap(a: MotionalState, b: MotionalState) -> float:
    """Inner product ``<phi_a|phi_b>`` (real for every supported pair)."""
    if isinstance(a, PointLike) and isinstance(b, PointLike):
        return 1.0 if a.z == b.z else 0.0
    fa, fb = _as_fock(a), _as_fock(b)
    if not (isinstance(fa, Fock) and isinstance(fb, Fock)):
        raise UnsupportedOverlapError(
            f"no position overlap for {type(a).__name__} / {type(b).__name__}"
        )
    if fa.ell0 != fb.ell0:
        raise UnsupportedOverlapError("position overlap requires equal widths")
    if fa.n == 0 and fb.n == 0:
        return math.exp(-((fa.z - fb.z) ** 2) / (8.0 * fa.ell0**2))
    if fa.z != fb.z:
        raise UnsupportedOverlapError("Fock position overlaps need equal centers")
    return 1.0 if fa.n == fb.n else 0.0


def wavefunction(state: MotionalState, z):
    """Real position-space wavefunction of a Gaussian or Fock state."""
    s = _as_fock(state)
    if not isinstance(s, Fock):
        raise UnsupportedOverlapError(f"{type(state).__name__} has no wavefunction")
    z = np.asarray(z, dtype=float)
    u = z - s.z
    log_norm = -0.5 * (s.n * math.log(2.0) + math.lgamma(s.n + 1)) - 0.25 * math.log(
        2.0 * math.pi * s.ell0**2
    )
    return math.exp(log_norm) * np.exp(-(u**2) / (4.0 * s.ell0**2)) * hermite(
        s.n, u / (math.sqrt(2.0) * s.ell0)
    )


class Statistics(str, enum.Enum):
    SEPARABLE = "separable"
    SYMMETRIC = "symmetric"
    ANTISYMMETRIC = "antisymmetric"

    @property
    def sign(self) -> int:
        return -1 if self is Statistics.ANTISYMMETRIC else 1


@dataclass(frozen=True)
class Ensemble:
    """Motional state of ``N`` atoms.

    Separable ensembles are mixtures of product states (``branches``) with
    probabilities ``weights``.  (Anti)symmetrized ensembles hold a single
    product state that is (anti)symmetrized under atom exchange.
    """

    branches: tuple
    weights: tuple
    statistics: Statistics = Statistics.SEPARABLE

    def __post_init__(self):
        object.__setattr__(self, "statistics", Statistics(self.statistics))
        branches = tuple(tuple(b) for b in self.branches)
        object.__setattr__(self, "branches", branches)
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not branches or not branches[0]:
            raise DomainError("an ensemble needs at least one atom")
        if len(self.weights) != len(branches):
            raise DomainError("one weight per mixture branch is required")
        if any(len(b) != len(branches[0]) for b in branches):
            raise DomainError("all mixture branches must hold the same number of atoms")
        if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-12:
            raise DomainError("mixture weights must be non-negative and sum to one")
        if self.statistics is not Statistics.SEPARABLE:
            self._check_indistinguishable()

    def _check_indistinguishable(self):
        if len(self.branches) != 1:
            raise DomainError("indistinguishable ensembles must be pure product states")
        states = self.branches[0]
        if not all(isinstance(s, (Gaussian, Fock)) for s in states):
            raise UnsupportedOverlapError(
                "(anti)symmetrization needs Gaussian or Fock single-atom states"
            )
        if len({s.ell0 for s in states}) != 1:
            raise DomainError("(anti)symmetrized states must share the same width")
        if self.statistics is Statistics.ANTISYMMETRIC:
            normalized = [_as_fock(s) for s in states]
            if len(set(normalized)) != len(normalized):
                raise PauliViolationError("antisymmetrized state has two identical atoms")

    @classmethod
    def separable(cls, states) -> "Ensemble":
        return cls((tuple(states),), (1.0,), Statistics.SEPARABLE)

    @classmethod
    def mixture(cls, branches, weights) -> "Ensemble":
        return cls(tuple(tuple(b) for b in branches), tuple(weights), Statistics.SEPARABLE)

    @classmethod
    def symmetric(cls, states) -> "Ensemble":
        return cls((tuple(states),), (1.0,), Statistics.SYMMETRIC)

    @classmethod
    def antisymmetric(cls, states) -> "Ensemble":
        return cls((tuple(states),), (1.0,), Statistics.ANTISYMMETRIC)

    @property
    def states(self) -> tuple:
        return self.branches[0]

    @property
    def n_atoms(self) -> int:
        return len(self.branches[0])
