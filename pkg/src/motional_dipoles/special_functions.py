"""Special functions needed by the closed-form decay rates.

* real part of the complex error function (plain and Gaussian-scaled),
* physicists' Hermite and generalized Laguerre polynomials by recurrence,
* exact linearization coefficients of a product of two Laguerre polynomials,
* the generalized hypergeometric series 2F2 for non-positive arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import wofz

from .exceptions import CapacityError, DomainError, PrecisionError

__all__ = [
    "re_erf_complex",
    "re_erf_complex_scaled",
    "hermite",
    "laguerre",
    "LaguerreLinearization",
    "laguerre_product_coeffs",
    "hyp2f2",
    "hyp2f2_partial_sums",
]

MAX_LINEARIZATION_ORDER = 60
HYP_MAX_TERMS = 1000
_EPS = np.finfo(float).eps


def re_erf_complex_scaled(a, b):
    """``exp(-b**2) * Re erf(a + i b)``, finite for every finite ``a, b``.

    Uses ``erf(z) = 1 - exp(-z**2) w(iz)`` with the Faddeeva function evaluated
    in the upper half plane, where it is bounded.  Vectorized.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(np.isnan(a)) or np.any(np.isnan(b)):
        raise DomainError("re_erf_complex: NaN input")
    sign = np.where(a < 0.0, -1.0, 1.0)
    aa, bb = np.abs(a), np.abs(b)
    w = wofz(-bb + 1j * aa)
    val = np.exp(-bb * bb) - np.exp(-aa * aa) * np.real(np.exp(-2j * aa * bb) * w)
    val = np.where(aa == 0.0, 0.0, sign * val)
    return float(val) if val.ndim == 0 else val


def re_erf_complex(a, b):
    """``Re erf(a + i b)``.

    Grows like ``exp(b**2 - a**2)``; overflows to ``inf`` rather than raising.
    Callers needing the Gaussian-damped combination should use
    :func:`re_erf_complex_scaled`.
    """
    scaled = np.asarray(re_erf_complex_scaled(a, b))
    bb = np.asarray(b, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        val = np.where(scaled == 0.0, 0.0, scaled * np.exp(bb * bb))
    return float(val) if val.ndim == 0 else val


def hermite(n: int, x):
    """Physicists' Hermite polynomial ``H_n(x)`` by three-term recurrence."""
    if n < 0:
        raise DomainError("hermite: n must be >= 0")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return float(h_prev) if x.ndim == 0 else h_prev
    h = 2.0 * x
    for k in range(1, n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return float(h) if x.ndim == 0 else h


def laguerre(n: int, alpha: int, x):
    """Generalized Laguerre polynomial ``L_n^alpha(x)`` by three-term recurrence."""
    if n < 0:
        raise DomainError("laguerre: n must be >= 0")
    if alpha < 0:
        raise DomainError("laguerre: only integer alpha >= 0 is supported")
    x = np.asarray(x, dtype=float)
    l_prev = np.ones_like(x)
    if n == 0:
        return float(l_prev) if x.ndim == 0 else l_prev
    lag = 1.0 + alpha - x
    for k in range(1, n):
        l_prev, lag = lag, ((2 * k + 1 + alpha - x) * lag - (k + alpha) * l_prev) / (k + 1)
    return float(lag) if x.ndim == 0 else lag


@dataclass(frozen=True)
class LaguerreLinearization:
    """``L_ni(x) L_nj(x) = sum_l coeffs[l] L_l(x)`` with exact rational coefficients."""

    n_i: int
    n_j: int
    coeffs: dict

    def as_float(self) -> dict:
        return {ell: float(c) for ell, c in self.coeffs.items()}

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return sum(float(c) * laguerre(ell, 0, x) for ell, c in self.coeffs.items())


def laguerre_product_coeffs(n_i: int, n_j: int) -> LaguerreLinearization:
    """Coefficients ``c_{ni,nj,l}`` for ``l`` in ``[|ni - nj|, ni + nj]``.

    The alternating factorial sum is evaluated in integer arithmetic, so the
    coefficients are exact.
    """
    if n_i < 0 or n_j < 0:
        raise DomainError("Laguerre degrees must be >= 0")
    if n_i + n_j > MAX_LINEARIZATION_ORDER:
        raise CapacityError(
            f"n_i + n_j = {n_i + n_j} exceeds the supported order {MAX_LINEARIZATION_ORDER}"
        )
    fact = math.factorial
    coeffs = {}
    for ell in range(abs(n_i - n_j), n_i + n_j + 1):
        p = n_i + n_j - ell
        total = 0
        # factorial arguments must be non-negative; each ratio is a multinomial
        for n in range((p + 1) // 2, min(n_i, n_j, p) + 1):
            total += 4**n * (
                fact(n_i + n_j - n)
                // (fact(n_i - n) * fact(n_j - n) * fact(2 * n - p) * fact(p - n))
            )
        coeffs[ell] = Fraction(-1, 2) ** p * total
    return LaguerreLinearization(n_i, n_j, coeffs)


def _check_hyp_args(b1, b2, x):
    for b in (b1, b2):
        if b <= 0 and float(b).is_integer():
            raise DomainError("hyp2f2: lower parameters must not be non-positive integers")
    if math.isnan(x):
        raise DomainError("hyp2f2: x is NaN")
    if x > 0:
        raise DomainError("hyp2f2 is only implemented for x <= 0")


def hyp2f2_partial_sums(a1, a2, b1, b2, x, n_terms: int) -> list:
    """Exact (rational) partial sums ``S_0 .. S_{n_terms-1}`` as floats."""
    _check_hyp_args(b1, b2, x)
    a1, a2, b1, b2, xr = (Fraction(v) for v in (a1, a2, b1, b2, x))
    term = Fraction(1)
    total = Fraction(0)
    sums = []
    for k in range(n_terms):
        total += term
        sums.append(float(total))
        term = term * (a1 + k) * (a2 + k) / ((b1 + k) * (b2 + k)) * xr / (k + 1)
    return sums


def _hyp2f2_float(a1, a2, b1, b2, x, max_terms):
    term = 1.0
    terms = [1.0]
    largest = 1.0
    for k in range(max_terms - 1):
        term *= (a1 + k) * (a2 + k) / ((b1 + k) * (b2 + k)) * x / (k + 1)
        terms.append(term)
        largest = max(largest, abs(term))
        total = math.fsum(terms) if k % 8 == 7 or abs(term) < 1e-14 * largest else None
        if total is not None and abs(term) < 1e-16 * abs(total):
            return total, largest, True
        if term == 0.0:
            return math.fsum(terms), largest, True
    return math.fsum(terms), largest, False


def _hyp2f2_exact(a1, a2, b1, b2, x, max_terms):
    a1, a2, b1, b2, xr = (Fraction(v) for v in (a1, a2, b1, b2, x))
    term = Fraction(1)
    total = Fraction(0)
    for k in range(max_terms):
        total += term
        if term == 0:
            return float(total), True
        if k > 0 and abs(float(term)) < 1e-17 * abs(float(total)):
            return float(total), True
        term = term * (a1 + k) * (a2 + k) / ((b1 + k) * (b2 + k)) * xr / (k + 1)
    return float(total), False


def hyp2f2(a1, a2, b1, b2, x, *, max_terms: int = HYP_MAX_TERMS, rtol: float = 1e-10):
    """Generalized hypergeometric series ``2F2(a1, a2; b1, b2; x)`` for ``x <= 0``.

    The series is first summed in double precision with compensated
    accumulation.  When the largest term exceeds the result by so much that
    rounding would spoil the ``rtol`` target, it is re-summed in exact
    rational arithmetic.  A :class:`PrecisionError` carrying the partial sum
    is raised if ``max_terms`` terms do not reach convergence.
    """
    _check_hyp_args(b1, b2, x)
    if x == 0.0:
        return 1.0
    if abs(x) < 700.0:
        total, largest, converged = _hyp2f2_float(a1, a2, b1, b2, x, max_terms)
        if not converged:
            raise PrecisionError(
                f"2F2 series did not converge within {max_terms} terms", partial=total
            )
        if largest * _EPS * 16 <= rtol * abs(total):
            return total
    total, converged = _hyp2f2_exact(a1, a2, b1, b2, x, max_terms)
    if not converged:
        raise PrecisionError(
            f"2F2 series did not converge within {max_terms} terms", partial=total
        )
    return total
