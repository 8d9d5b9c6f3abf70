"""Transition parameters, pair geometry and the fixed-position coefficients.

Everything here works in reduced units: rates in units of the single-atom
decay rate ``gamma0`` and lengths in units of ``1/k0``.  A pair of atoms is
then described by ``xi = k0 * r`` and the angle ``alpha`` between the
quantization axis and the vector joining the atoms.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import DivergenceError, DomainError

__all__ = [
    "TransitionKind",
    "TransitionSpec",
    "PairGeometry",
    "AngularFactors",
    "angular_factors",
    "polarization_sum",
    "classical_gamma",
    "classical_delta",
]

_SERIES_SWITCH = 0.5
_SERIES_TERMS = 12


class TransitionKind(str, enum.Enum):
    PI = "pi"
    SIGMA_PLUS = "sigma+"
    SIGMA_MINUS = "sigma-"

    @classmethod
    def parse(cls, value) -> "TransitionKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "")
        aliases = {
            "pi": cls.PI,
            "sigma+": cls.SIGMA_PLUS,
            "sigmaplus": cls.SIGMA_PLUS,
            "sigma-": cls.SIGMA_MINUS,
            "sigmaminus": cls.SIGMA_MINUS,
        }
        try:
            return aliases[key]
        except KeyError:
            raise DomainError(f"unknown transition kind {value!r}") from None

    @property
    def is_sigma(self) -> bool:
        return self is not TransitionKind.PI


@dataclass(frozen=True)
class TransitionSpec:
    """Atomic transition shared by every atom of the sample.

    ``gamma0`` and ``k0`` only matter when converting to physical units; all
    internal computations use ``gamma0 = k0 = 1``.
    """

    kind: TransitionKind = TransitionKind.PI
    gamma0: float = 1.0
    k0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", TransitionKind.parse(self.kind))
        if not self.gamma0 > 0:
            raise DomainError("gamma0 must be positive")
        if not self.k0 > 0:
            raise DomainError("k0 must be positive")

    @property
    def wavelength(self) -> float:
        return 2.0 * math.pi / self.k0


@dataclass(frozen=True)
class PairGeometry:
    r: float
    alpha: float
    k0: float = 1.0

    def __post_init__(self):
        if not self.r >= 0:
            raise DomainError("separation must be non-negative")
        _check_alpha(self.alpha)

    @property
    def xi(self) -> float:
        return self.k0 * self.r

    @classmethod
    def from_points(cls, ri, rj, k0: float = 1.0) -> "PairGeometry":
        """Geometry of the vector ``ri - rj`` relative to the z (quantization) axis."""
        d = np.asarray(ri, dtype=float) - np.asarray(rj, dtype=float)
        r = float(np.linalg.norm(d))
        if r == 0.0:
            return cls(0.0, 0.0, k0)
        cos_a = min(1.0, max(-1.0, d[2] / r))
        return cls(r, math.acos(cos_a), k0)


class AngularFactors(NamedTuple):
    p: float
    q: float


def _check_alpha(alpha):
    a = np.asarray(alpha, dtype=float)
    if np.any(~np.isfinite(a)) or np.any(a < 0.0) or np.any(a > math.pi):
        raise DomainError(f"alpha must lie in [0, pi], got {alpha!r}")


def angular_factors(kind, alpha: float) -> AngularFactors:
    """Angular factors ``(p, q)`` of a pair whose axis makes angle ``alpha``
    with the quantization axis."""
    kind = TransitionKind.parse(kind)
    _check_alpha(alpha)
    c2 = math.cos(alpha) ** 2
    if kind is TransitionKind.PI:
        return AngularFactors(math.sin(alpha) ** 2, 1.0 - 3.0 * c2)
    return AngularFactors(0.5 * (1.0 + c2), 0.5 * (3.0 * c2 - 1.0))


def polarization_sum(kind, alpha: float, theta, phi):
    """Sum over the two transverse polarizations of ``|eps . e_d|^2``.

    Angles ``(theta, phi)`` are spherical coordinates of the photon direction
    in the frame whose z axis points along the pair axis.  The result is
    ``1 - mu`` with ``mu = |k_hat . e_d|^2``.
    """
    kind = TransitionKind.parse(kind)
    _check_alpha(alpha)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    sa, ca = math.sin(alpha), math.cos(alpha)
    st, ct = np.sin(theta), np.cos(theta)
    if kind is TransitionKind.PI:
        mu = (np.cos(phi) * sa * st + ca * ct) ** 2
    else:
        # circular dipole: |k.e_d|^2 = (k_x^2 + k_y^2) / 2 in the lab frame
        kx = ct * sa - ca * np.cos(phi) * st
        ky = st * np.sin(phi)
        mu = 0.5 * (kx**2 + ky**2)
    return 1.0 - mu


def _as_xi(xi):
    x = np.asarray(xi, dtype=float)
    if np.any(np.isnan(x)):
        raise DomainError("xi is NaN")
    if np.any(x < 0.0):
        raise DomainError("xi must be non-negative")
    return x


def _near_field_series(x):
    """``sin(x)/x`` and ``cos(x)/x^2 - sin(x)/x^3`` from their Taylor series."""
    x2 = x * x
    sinc = np.zeros_like(x)
    near = np.zeros_like(x)
    power = np.ones_like(x)
    for n in range(_SERIES_TERMS):
        sign = -1.0 if n % 2 else 1.0
        sinc += sign * power / math.factorial(2 * n + 1)
        # n-th term of the second series carries x^(2n) with n shifted by one
        near -= sign * 2.0 * (n + 1) * power / math.factorial(2 * n + 3)
        power = power * x2
    return sinc, near


def classical_gamma(xi, f: AngularFactors):
    """Decay rate ``gamma_ij / gamma0`` for atoms at fixed positions.

    Vectorized over ``xi``.  Below ``xi = 0.5`` the cancelling
    ``cos/xi^2 - sin/xi^3`` pair is replaced by its Taylor series.
    """
    scalar = np.ndim(xi) == 0
    x = np.atleast_1d(_as_xi(xi))
    p, q = f
    out = np.empty_like(x)
    small = x < _SERIES_SWITCH
    sinc, near = _near_field_series(x[small])
    out[small] = 1.5 * (p * sinc + q * near)
    xl = x[~small]
    s, c = np.sin(xl), np.cos(xl)
    out[~small] = 1.5 * (p * s / xl + q * (c / xl**2 - s / xl**3))
    return float(out[0]) if scalar else out


def classical_delta(xi, f: AngularFactors):
    """Dipole-dipole shift ``Delta_ij / gamma0`` for atoms at fixed positions.

    The ``1/xi^3`` pole at contact is genuine; ``xi = 0`` raises
    :class:`DivergenceError`.
    """
    scalar = np.ndim(xi) == 0
    x = np.atleast_1d(_as_xi(xi))
    if np.any(x == 0.0):
        raise DivergenceError("classical dipole-dipole shift diverges at xi = 0")
    p, q = f
    s, c = np.sin(x), np.cos(x)
    out = 0.75 * (-p * c / x + q * (s / x**2 + c / x**3))
    return float(out[0]) if scalar else out
