"""Decay rates and regularized dipole-dipole shifts for quantized motion.

Three independent routes are available:

* closed forms for Gaussian, thermal and (at coincident centers) Fock states,
* angular quadrature over photon directions weighted by the motional
  correlation function (``gamma_quadrature``),
* one-dimensional convolution of the classical shift with the relative
  position density of the pair (``delta_*`` functions).

All rates and shifts are in units of ``gamma0``; lengths in units of ``1/k0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .correlation import (
    SeparableCorrelation,
    SymmetrizedCorrelation,
    gram_matrix,
    permutation_tensor,
)
from .exceptions import (
    ConsistencyError,
    DivergenceError,
    DomainError,
    PrecisionError,
    UnsupportedOverlapError,
)
from .motional_states import (
    Ensemble,
    Fock,
    Gaussian,
    PointLike,
    Statistics,
    Thermal,
    overlap,
    wavefunction,
)
from .special_functions import hyp2f2, laguerre_product_coeffs, re_erf_complex_scaled
from .transition_geometry import (
    AngularFactors,
    TransitionKind,
    TransitionSpec,
    angular_factors,
    classical_delta,
    classical_gamma,
    polarization_sum,
)

__all__ = [
    "Cutoff",
    "CoefficientSet",
    "gamma_quadrature",
    "gamma_axial_quadrature",
    "gamma_gaussian_closed",
    "gamma_gaussian_smallxi",
    "gamma_gaussian_farfield",
    "gamma_small_eta_law",
    "gamma_large_eta_law",
    "gamma_fock_smallxi",
    "gamma_indistinguishable",
    "delta_regularized",
    "delta_convolution",
    "delta_indistinguishable",
    "density_kernel",
    "build_coefficient_set",
]

CLASSICAL_ETA = 1e-4
SMALL_ETA = 0.05
LARGE_ETA = 50.0
FOCK_SERIES_MAX_ETA = 20.0
CUTOFF_FLOOR = 1e-4
ATOMIC_SIZE = 1e-3
DEFAULT_CUTOFF = 1e-2


class CutoffWarning(UserWarning):
    """Cutoff below the atomic size, where the dipole approximation is doubtful."""


@dataclass(frozen=True)
class Cutoff:
    """Minimal interatomic distance ``eps`` excluded from the shift integral."""

    k0eps: float = DEFAULT_CUTOFF

    def __post_init__(self):
        if not self.k0eps >= CUTOFF_FLOOR:
            raise DomainError(f"cutoff k0*eps = {self.k0eps} is below the floor {CUTOFF_FLOOR}")
        if self.k0eps < ATOMIC_SIZE:
            warnings.warn(
                f"cutoff k0*eps = {self.k0eps:g} is below the atomic size ~{ATOMIC_SIZE:g}",
                CutoffWarning,
                stacklevel=3,
            )

    @classmethod
    def coerce(cls, value) -> "Cutoff":
        if isinstance(value, Cutoff):
            return value
        return cls(float(value))


# ---------------------------------------------------------------------------
# angular quadrature


@lru_cache(maxsize=None)
def _legendre(n):
    return np.polynomial.legendre.leggauss(n)


def _sphere_integral(corr, kind, alpha, n_theta, n_phi):
    u, wu = _legendre(n_theta)
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    pol = polarization_sum(kind, alpha, np.arccos(u)[:, None], phi[None, :])
    azimuthal = pol.sum(axis=1) * (2.0 * math.pi / n_phi)
    return 3.0 / (8.0 * math.pi) * np.sum(wu * azimuthal * corr(u))


def gamma_quadrature(
    corr, kind, alpha: float, *, order: int = 64, max_order: int = 512, tol: float = 1e-9
) -> float:
    """Decay rate from the angular integral over photon directions.

    Gauss-Legendre in ``cos(theta')`` times a periodic trapezoid in ``phi'``,
    both of size ``order``, doubled until two successive values differ by less
    than ``tol``.  ``corr`` maps ``kz = cos(theta')`` (units of ``k0``) to the
    correlation function along the pair axis.
    """
    kind = TransitionKind.parse(kind)
    n = order
    prev = _sphere_integral(corr, kind, alpha, n, n)
    while True:
        if n >= max_order:
            raise PrecisionError("angular quadrature did not converge", partial=prev.real)
        n *= 2
        val = _sphere_integral(corr, kind, alpha, n, n)
        if abs(val - prev) < tol:
            break
        prev = val
    if abs(val.imag) > 1e-10:
        raise ConsistencyError(f"decay rate has imaginary part {val.imag:.3e}")
    return float(val.real)


def gamma_axial_quadrature(
    corr, f: AngularFactors, *, order: int = 64, max_order: int = 4096, tol: float = 1e-11
) -> float:
    """Same integral with the azimuthal average done analytically.

    The polarization sum averaged over ``phi'`` is ``(p - q/2) + (q/2) u**2``
    with ``u = cos(theta')``.  Used for fallbacks that only know ``(p, q)``.
    """
    p, q = f

    def integral(n):
        u, wu = _legendre(n)
        return 0.75 * np.sum(wu * ((p - 0.5 * q) + 0.5 * q * u * u) * corr(u))

    n = order
    prev = integral(n)
    while True:
        if n >= max_order:
            raise PrecisionError("axial quadrature did not converge", partial=prev.real)
        n *= 2
        val = integral(n)
        if abs(val - prev) < tol:
            break
        prev = val
    if abs(val.imag) > 1e-10:
        raise ConsistencyError(f"decay rate has imaginary part {val.imag:.3e}")
    return float(val.real)


# ---------------------------------------------------------------------------
# Gaussian states


def _gaussian_small_eta(x, eta, f):
    """Deviation from the classical rate, integrated without cancellation."""
    p, q = f
    n = 64 + int(1.2 * float(np.max(x, initial=0.0)))
    u, wu = _legendre(n)
    weight = wu * ((p - 0.5 * q) + 0.5 * q * u * u) * np.expm1(-((eta * u) ** 2))
    dev = 0.75 * np.cos(np.multiply.outer(x, u)) @ weight
    return classical_gamma(x, f) + dev


def gamma_gaussian_closed(xi, eta: float, f: AngularFactors):
    """Decay rate of two Gaussian wave packets of width ``eta`` whose centers
    are ``xi`` apart.  Vectorized over ``xi``.

    Below ``eta = 1e-4`` the classical rate is returned; below ``eta = 0.05``
    the ``1/eta**5`` cancellation of the closed formula is avoided by
    integrating the deviation from the classical rate directly.
    """
    scalar = np.ndim(xi) == 0
    x = np.abs(np.atleast_1d(np.asarray(xi, dtype=float)))
    if not eta >= 0:
        raise DomainError("eta must be non-negative")
    if eta < CLASSICAL_ETA:
        out = classical_gamma(x, f)
    elif eta < SMALL_ETA:
        out = _gaussian_small_eta(x, eta, f)
    else:
        q = f.q
        e2, e4 = eta * eta, eta**4
        scaled_erf = re_erf_complex_scaled(eta, x / (2.0 * eta))
        out = (
            3.0
            / (16.0 * eta**5)
            * (
                math.sqrt(math.pi) / 6.0 * (16.0 * e4 - q * (4.0 * e4 + 3.0 * x * x - 6.0 * e2)) * scaled_erf
                - q * eta * math.exp(-e2) * (2.0 * e2 * np.cos(x) - x * np.sin(x))
            )
        )
    return float(out[0]) if scalar else out


def _smallxi_series(eta, q, terms=40):
    # (4 - q)/4 * int_0^1 exp(-eta^2 u^2) du + 3q/4 * int_0^1 u^2 exp(-eta^2 u^2) du
    x = -eta * eta
    total = 0.0
    term = 1.0
    for m in range(terms):
        total += term * ((4.0 - q) / (4.0 * (2 * m + 1)) + 3.0 * q / (4.0 * (2 * m + 3)))
        term *= x / (m + 1)
    return total


def gamma_gaussian_smallxi(eta: float, f: AngularFactors) -> float:
    """Decay rate of two Gaussian packets with coincident centers."""
    if not eta >= 0:
        raise DomainError("eta must be non-negative")
    q = f.q
    if eta < 1.0:
        return _smallxi_series(eta, q)
    erf = math.erf(eta)
    return math.sqrt(math.pi) * erf * ((8.0 - 2.0 * q) * eta**2 + 3.0 * q) / (
        16.0 * eta**3
    ) - 3.0 * q * math.exp(-eta * eta) / (8.0 * eta**2)


def gamma_gaussian_farfield(xi, eta: float, f: AngularFactors):
    """Leading far-field behaviour: the radiative term damped by ``exp(-eta^2)``."""
    xi = np.asarray(xi, dtype=float)
    return 1.5 * f.p * np.sin(xi) / xi * math.exp(-eta * eta)


def gamma_small_eta_law(eta: float, f: AngularFactors) -> float:
    return 1.0 - (5.0 + f.q) * eta**2 / 15.0


def gamma_large_eta_law(eta: float, f: AngularFactors) -> float:
    return math.sqrt(math.pi) * (4.0 - f.q) / (8.0 * eta)


# ---------------------------------------------------------------------------
# Fock states


def _fock_pair_correlation(n_i, n_j, eta):
    ens = Ensemble.separable([Fock(n_i, 0.0, eta), Fock(n_j, 0.0, eta)])
    return SeparableCorrelation(ens, 0, 1)


def gamma_fock_smallxi(n_i: int, n_j: int, eta: float, f: AngularFactors, *, return_method=False):
    """Decay rate of two atoms in Fock states ``n_i``, ``n_j`` with coincident
    trap centers, from the Laguerre linearization and 2F2 series.

    For ``eta > 20``, or if any series fails to converge, the angular
    integral is evaluated by quadrature instead; ``return_method=True``
    reports which route was taken.
    """
    if not eta > 0:
        raise DomainError("eta must be positive")
    lin = laguerre_product_coeffs(n_i, n_j)
    value = None
    method = "fock-2F2"
    if eta <= FOCK_SERIES_MAX_ETA:
        q = f.q
        x = -eta * eta
        try:
            value = 0.25 * math.fsum(
                float(c)
                * (
                    q * hyp2f2(1.5, ell + 1, 1.0, 2.5, x)
                    + (4.0 - q) * hyp2f2(0.5, ell + 1, 1.0, 1.5, x)
                )
                for ell, c in lin.coeffs.items()
            )
        except PrecisionError:
            value = None
    if value is None:
        method = "quadrature"
        value = gamma_axial_quadrature(_fock_pair_correlation(n_i, n_j, eta), f)
    return (value, method) if return_method else value


# ---------------------------------------------------------------------------
# shifts


def density_kernel(a, b, c, d):
    """Relative-coordinate kernel ``K(z) = int g_ab(x) g_cd(x + z) dx`` with
    ``g_ab = phi_a phi_b``, for Gaussian/Fock states of equal width.

    The integrand is a polynomial times a Gaussian in ``x``, so a Gauss-Hermite
    rule of sufficient order integrates it exactly.
    """
    states = [a, b, c, d]
    widths = {s.ell0 for s in states if isinstance(s, (Gaussian, Fock))}
    if len(widths) != 1 or not all(isinstance(s, (Gaussian, Fock)) for s in states):
        raise UnsupportedOverlapError("density kernel needs Gaussian/Fock states of equal width")
    ell = widths.pop()
    degree = sum(getattr(s, "n", 0) for s in states)
    t, w = np.polynomial.hermite.hermgauss(degree // 2 + 2)
    zsum = sum(s.z for s in states)
    scale = ell * w * np.exp(t * t)

    def kernel(z):
        z = np.asarray(z, dtype=float)
        x = (zsum - 2.0 * z[..., None]) / 4.0 + ell * t
        vals = (
            wavefunction(a, x) * wavefunction(b, x) * wavefunction(c, x + z[..., None])
            * wavefunction(d, x + z[..., None])
        )
        return vals @ scale

    center = ((c.z + d.z) - (a.z + b.z)) / 2.0
    spread = ell * (2.0 + math.sqrt(max(getattr(s, "n", 0) for s in states) + 1.0))
    return kernel, center, spread


def _segments(lo, hi, eps, width):
    """Breakpoints on ``[lo, hi]`` (subset of ``[eps, inf)``): geometric near the
    pole at zero, then pieces no longer than ``width``."""
    pts = [lo]
    x = lo
    while x < hi and x < 0.5:
        x = min(2.0 * x, hi)
        pts.append(x)
    if pts[-1] < hi:
        n = max(1, int(math.ceil((hi - pts[-1]) / width)))
        pts.extend(np.linspace(pts[-1], hi, n + 1)[1:].tolist())
    return pts


def _integrate_shift(kernel, center, spread, f, eps):
    """``int_{|z| >= eps} K(z) Delta_cl(|z|) dz`` for a kernel concentrated on
    ``[center - 17 spread, center + 17 spread]``."""
    reach = 17.0 * spread
    width = min(max(spread, 1e-12), 1.0)
    total = 0.0
    abserr = 0.0
    for side in (1.0, -1.0):
        # |z| range contributing on this side of the pole
        lo = max(eps, side * center - reach)
        hi = side * center + reach
        if hi <= lo:
            continue
        pts = _segments(lo, hi, eps, width)

        def integrand(s, side=side):
            return float(kernel(np.array([side * s]))[0]) * classical_delta(s, f)

        for x0, x1 in zip(pts[:-1], pts[1:]):
            val, err = integrate.quad(integrand, x0, x1, epsabs=1e-15, epsrel=1e-11, limit=200)
            total += val
            abserr += err
    if abserr > 1e-8 * max(1.0, abs(total)):
        raise PrecisionError("shift integral did not converge", partial=total)
    return total


def _gaussian_kernel(xi, eta):
    norm = 1.0 / (2.0 * math.sqrt(math.pi) * eta)

    def kernel(z):
        return norm * np.exp(-((z + xi) ** 2) / (4.0 * eta * eta))

    return kernel, -xi, math.sqrt(2.0) * eta


def delta_regularized(xi: float, eta: float, f: AngularFactors, cutoff=DEFAULT_CUTOFF) -> float:
    """Regularized shift of two Gaussian packets of width ``eta``, centers ``xi``
    apart, with the interval ``(-eps, eps)`` removed from the convolution."""
    cutoff = Cutoff.coerce(cutoff)
    xi = abs(float(xi))
    if not eta >= 0:
        raise DomainError("eta must be non-negative")
    if eta == 0.0:
        if xi < cutoff.k0eps:
            raise DivergenceError("point-like atoms closer than the cutoff")
        return classical_delta(xi, f)
    kernel, center, spread = _gaussian_kernel(xi, eta)
    return _integrate_shift(kernel, center, spread, f, cutoff.k0eps)


def delta_convolution(a, b, c, d, f: AngularFactors, cutoff=DEFAULT_CUTOFF) -> float:
    """Regularized shift term for the two-body density ``phi_a phi_b (x) phi_c phi_d``."""
    cutoff = Cutoff.coerce(cutoff)
    kernel, center, spread = density_kernel(a, b, c, d)
    return _integrate_shift(kernel, center, spread, f, cutoff.k0eps)


# ---------------------------------------------------------------------------
# indistinguishable atoms


def _exchange_terms(ensemble, i, j):
    if ensemble.statistics is Statistics.SEPARABLE:
        raise DomainError("indistinguishable rates need a (anti)symmetric ensemble")
    states = ensemble.states
    gram = gram_matrix(states)
    tensor = permutation_tensor(gram, i, j, ensemble.statistics.sign)
    return states, gram, tensor


def _all_gaussian(states):
    return all(isinstance(s, Gaussian) or (isinstance(s, Fock) and s.n == 0) for s in states)


def _midpoints(states, gram, tensor):
    """Weights ``w`` and midpoint separations of the Gaussian exchange terms."""
    weights, seps = [], []
    for (a, b, c, d), lam in tensor.nonzero():
        w = lam * gram[a, b] * gram[c, d]
        if w == 0.0:
            continue
        weights.append(w)
        seps.append(abs((states[a].z + states[b].z - states[c].z - states[d].z) / 2.0))
    return np.array(weights), np.array(seps)


def gamma_indistinguishable(ensemble: Ensemble, f: AngularFactors, i: int = 0, j: int = 1) -> float:
    """Decay rate of (anti)symmetrized Gaussian or coincident-Fock states.

    Gaussian ensembles: permutation-weighted sum of the closed form at the
    midpoint separations.  Fock ensembles (all centers equal): direct terms
    from the 2F2 formula and exchange terms by axial quadrature.
    """
    if i == j:
        return 1.0
    states, gram, tensor = _exchange_terms(ensemble, i, j)
    eta = states[0].ell0
    if _all_gaussian(states):
        w, seps = _midpoints(states, gram, tensor)
        uniq, inverse = np.unique(seps, return_inverse=True)
        rates = gamma_gaussian_closed(uniq, eta, f)
        return float(math.fsum(w * rates[inverse]))
    if len({s.z for s in states}) != 1:
        raise UnsupportedOverlapError("indistinguishable Fock atoms need coincident centers")
    total = []
    for (a, b, c, d), lam in tensor.nonzero():
        sa, sb, sc, sd = (states[k] for k in (a, b, c, d))
        if sa == sb and sc == sd:
            term = gamma_fock_smallxi(getattr(sa, "n", 0), getattr(sc, "n", 0), eta, f)
        else:
            term = gamma_axial_quadrature(
                lambda kz: overlap(sa, sb, kz) * overlap(sc, sd, -kz), f
            )
        total.append(lam * term)
    return float(math.fsum(total))


def delta_indistinguishable(
    ensemble: Ensemble, f: AngularFactors, cutoff=DEFAULT_CUTOFF, i: int = 0, j: int = 1
) -> float:
    if i == j:
        return 0.0
    cutoff = Cutoff.coerce(cutoff)
    states, gram, tensor = _exchange_terms(ensemble, i, j)
    eta = states[0].ell0
    if _all_gaussian(states):
        w, seps = _midpoints(states, gram, tensor)
        uniq, inverse = np.unique(seps, return_inverse=True)
        shifts = np.array([delta_regularized(s, eta, f, cutoff) for s in uniq])
        return float(math.fsum(w * shifts[inverse]))
    total = []
    for (a, b, c, d), lam in tensor.nonzero():
        total.append(lam * delta_convolution(states[a], states[b], states[c], states[d], f, cutoff))
    return float(math.fsum(total))


# ---------------------------------------------------------------------------
# assembly


@dataclass
class CoefficientSet:
    """Rate and shift matrices of an ``N``-atom sample, units of ``gamma0``."""

    gamma: np.ndarray
    delta: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def n_atoms(self) -> int:
        return self.gamma.shape[0]

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.gamma).min())


def _width(s):
    if isinstance(s, PointLike):
        return 0.0
    if isinstance(s, Gaussian) or (isinstance(s, Fock) and s.n == 0):
        return s.ell0
    if isinstance(s, Thermal):
        return s.effective_width
    return None


def _separable_pair(ensemble, i, j, f, kind, alpha, cutoff, method):
    """(gamma, delta, gamma_tag, delta_tag) for one separable pair."""
    gammas, deltas, gtags, dtags = [], [], set(), set()
    for p, branch in zip(ensemble.weights, ensemble.branches):
        if p == 0.0:
            continue
        si, sj = branch[i], branch[j]
        wi, wj = _width(si), _width(sj)
        xi = abs(si.z - sj.z)
        if wi is not None and wj is not None:
            eta = wi if wi == wj else math.sqrt(0.5 * (wi * wi + wj * wj))
            if method == "closed" or (method == "auto" and eta <= LARGE_ETA):
                gammas.append(p * gamma_gaussian_closed(xi, eta, f))
                gtags.add("classical" if eta == 0.0 else "closed")
            deltas.append(p * delta_regularized(xi, eta, f, cutoff))
            dtags.add("classical" if eta == 0.0 else "convolution")
            continue
        if not all(isinstance(s, (Gaussian, Fock)) for s in (si, sj)):
            raise UnsupportedOverlapError(
                f"no coefficient route for {type(si).__name__} / {type(sj).__name__}"
            )
        if method != "quadrature" and si.z == sj.z and si.ell0 == sj.ell0:
            gammas.append(p * gamma_fock_smallxi(si.n if isinstance(si, Fock) else 0,
                                                 sj.n if isinstance(sj, Fock) else 0, si.ell0, f))
            gtags.add("closed-fock")
        elif method == "closed":
            raise UnsupportedOverlapError("no closed form for Fock states at distinct centers")
        deltas.append(p * delta_convolution(si, si, sj, sj, f, cutoff))
        dtags.add("convolution")
    if not gtags:
        gamma = gamma_quadrature(SeparableCorrelation(ensemble, i, j), kind, alpha)
        gtags.add("quadrature")
    elif len(gammas) != sum(1 for p in ensemble.weights if p != 0.0):
        # mixed routes across branches: use the quadrature for the whole pair
        gamma = gamma_quadrature(SeparableCorrelation(ensemble, i, j), kind, alpha)
        gtags = {"quadrature"}
    else:
        gamma = math.fsum(gammas)
    return gamma, math.fsum(deltas), "+".join(sorted(gtags)), "+".join(sorted(dtags))


def _symmetrized_pair(ensemble, i, j, f, kind, alpha, cutoff, method):
    states = ensemble.states
    if method == "quadrature" or (method == "auto" and states[0].ell0 > LARGE_ETA):
        gamma = gamma_quadrature(SymmetrizedCorrelation(ensemble, i, j), kind, alpha)
        gtag = "quadrature"
    else:
        gamma = gamma_indistinguishable(ensemble, f, i, j)
        gtag = "exchange-closed"
    delta = delta_indistinguishable(ensemble, f, cutoff, i, j)
    return gamma, delta, gtag, "exchange-convolution"


def build_coefficient_set(
    ensemble: Ensemble,
    transition=TransitionKind.PI,
    alpha: float = math.pi / 2,
    cutoff=DEFAULT_CUTOFF,
    method: str = "auto",
    n_jobs: int | None = None,
) -> CoefficientSet:
    """Assemble the ``N x N`` rate and shift matrices.

    Atoms are aligned along one axis making angle ``alpha`` with the
    quantization axis; their positions are the state centers.  ``method`` is
    ``"auto"`` (closed forms where available), ``"closed"`` or
    ``"quadrature"`` (angular quadrature for every rate).
    """
    kind = transition.kind if isinstance(transition, TransitionSpec) else TransitionKind.parse(transition)
    method = {"closedform": "closed", "closed_form": "closed"}.get(method, method).lower()
    if method not in ("auto", "closed", "quadrature"):
        raise DomainError(f"unknown method {method!r}")
    cutoff = Cutoff.coerce(cutoff)
    f = angular_factors(kind, alpha)
    n = ensemble.n_atoms
    pair_fn = _separable_pair if ensemble.statistics is Statistics.SEPARABLE else _symmetrized_pair
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def work(ij):
        return pair_fn(ensemble, ij[0], ij[1], f, kind, alpha, cutoff, method)

    if n_jobs and n_jobs != 1 and len(pairs) > 1:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=n_jobs)(delayed(work)(ij) for ij in pairs)
    else:
        results = [work(ij) for ij in pairs]

    gamma = np.eye(n)
    delta = np.zeros((n, n))
    gtags = [["diagonal"] * n for _ in range(n)]
    dtags = [["diagonal"] * n for _ in range(n)]
    for (i, j), (g, d, gt, dt) in zip(pairs, results):
        gamma[i, j] = gamma[j, i] = g
        delta[i, j] = delta[j, i] = d
        gtags[i][j] = gtags[j][i] = gt
        dtags[i][j] = dtags[j][i] = dt
    min_eig = float(np.linalg.eigvalsh(gamma).min())
    metadata = {
        "transition": kind.value,
        "alpha": alpha,
        "cutoff": cutoff.k0eps,
        "method": method,
        "gamma_method": gtags,
        "delta_method": dtags,
        "min_eigenvalue": min_eig,
        "psd": min_eig >= -1e-8,
    }
    if ensemble.statistics is not Statistics.SEPARABLE:
        metadata["gram_condition"] = float(np.linalg.cond(gram_matrix(ensemble.states)))
    if not metadata["psd"]:
        warnings.warn(
            f"rate matrix has a negative eigenvalue {min_eig:.3e}", RuntimeWarning, stacklevel=2
        )
    return CoefficientSet(gamma, delta, metadata)
