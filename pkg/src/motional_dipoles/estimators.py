"""scikit-learn style transformers for parameter sweeps.

Each transformer maps rows of sweep parameters to coefficient columns, so a
grid can be evaluated with the usual ``fit``/``transform`` protocol and the
settings recovered with ``get_params``.  Rows are processed independently,
optionally in parallel, and returned in input order.
"""

from __future__ import annotations

import math

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .coefficients import (
    Cutoff,
    LARGE_ETA,
    gamma_fock_smallxi,
    gamma_gaussian_closed,
    gamma_indistinguishable,
    gamma_quadrature,
    delta_regularized,
)
from .correlation import SeparableCorrelation, SymmetrizedCorrelation
from .exceptions import DivergenceError, DomainError, PauliViolationError
from .motional_states import Ensemble, Gaussian
from .transition_geometry import TransitionKind, angular_factors, classical_gamma

__all__ = ["GaussianDecayRates", "RegularizedShifts", "FockDecayRates"]


def _map_rows(fn, rows, n_jobs):
    if n_jobs in (None, 1) or len(rows) < 2:
        return [fn(r) for r in rows]
    return Parallel(n_jobs=n_jobs)(delayed(fn)(r) for r in rows)


class _SweepTransformer(TransformerMixin, BaseEstimator):
    n_columns_in = 2

    def _validate_common(self):
        self.kind_ = TransitionKind.parse(self.transition)
        self.factors_ = angular_factors(self.kind_, self.alpha)

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=float, ensure_min_samples=1)
        if X.shape[1] != self.n_columns_in:
            raise ValueError(f"expected {self.n_columns_in} columns, got {X.shape[1]}")
        if np.any(X < 0):
            raise ValueError("sweep parameters must be non-negative")
        self._validate_common()
        return self

    def _check(self, X):
        check_is_fitted(self, "factors_")
        X = validate_data(self, X, dtype=float, reset=False)
        if np.any(X < 0):
            raise ValueError("sweep parameters must be non-negative")
        return X


class GaussianDecayRates(_SweepTransformer):
    """Rows ``(xi, eta)`` to columns ``(gamma_sep, gamma_plus, gamma_minus)``.

    ``gamma_plus``/``gamma_minus`` are the rates of the symmetrized and
    antisymmetrized two-atom states; ``nan`` where the antisymmetric state
    does not exist (coincident packets).
    """

    def __init__(self, transition="pi", alpha=math.pi / 2, method="auto", n_jobs=None):
        self.transition = transition
        self.alpha = alpha
        self.method = method
        self.n_jobs = n_jobs

    def _row(self, row):
        xi, eta = float(row[0]), float(row[1])
        f = self.factors_
        if eta == 0.0:
            g = classical_gamma(xi, f)
            return [g, g, g if xi > 0 else math.nan]
        quad = self.method == "quadrature" or (self.method == "auto" and eta > LARGE_ETA)
        out = []
        pair = [Gaussian(0.0, eta), Gaussian(xi, eta)]
        if quad:
            out.append(gamma_quadrature(SeparableCorrelation(Ensemble.separable(pair), 0, 1), self.kind_, self.alpha))
        else:
            out.append(gamma_gaussian_closed(xi, eta, f))
        for ctor in (Ensemble.symmetric, Ensemble.antisymmetric):
            try:
                ens = ctor(pair)
                if quad:
                    out.append(gamma_quadrature(SymmetrizedCorrelation(ens, 0, 1), self.kind_, self.alpha))
                else:
                    out.append(gamma_indistinguishable(ens, f))
            except PauliViolationError:
                out.append(math.nan)
        return out

    def transform(self, X):
        X = self._check(X)
        return np.array(_map_rows(self._row, list(X), self.n_jobs), dtype=float).reshape(-1, 3)

    def get_feature_names_out(self, input_features=None):
        return np.array(["gamma_sep", "gamma_plus", "gamma_minus"], dtype=object)


class RegularizedShifts(_SweepTransformer):
    """Rows ``(xi, eta)`` to one regularized-shift column per cutoff.

    Point-like rows (``eta = 0``) closer than a cutoff have no finite shift
    and give ``nan`` in that column.
    """

    def __init__(self, transition="pi", alpha=math.pi / 2, cutoffs=(1e-2,), n_jobs=None):
        self.transition = transition
        self.alpha = alpha
        self.cutoffs = cutoffs
        self.n_jobs = n_jobs

    def _validate_common(self):
        super()._validate_common()
        if len(self.cutoffs) == 0:
            raise ValueError("at least one cutoff is required")
        self.cutoffs_ = [Cutoff.coerce(c) for c in self.cutoffs]

    def _row(self, row):
        xi, eta = float(row[0]), float(row[1])
        out = []
        for c in self.cutoffs_:
            try:
                out.append(delta_regularized(xi, eta, self.factors_, c))
            except DivergenceError:
                out.append(math.nan)
        return out

    def transform(self, X):
        X = self._check(X)
        rows = _map_rows(self._row, list(X), self.n_jobs)
        return np.array(rows, dtype=float).reshape(-1, len(self.cutoffs_))

    def get_feature_names_out(self, input_features=None):
        return np.array([f"delta_eps{c.k0eps:g}" for c in self.cutoffs_], dtype=object)


class FockDecayRates(_SweepTransformer):
    """Rows ``(eta,)`` to the coincident-center rate, one column per ``(n_i, n_j)``."""

    n_columns_in = 1

    def __init__(self, transition="pi", alpha=math.pi / 2, levels=((0, 0),), n_jobs=None):
        self.transition = transition
        self.alpha = alpha
        self.levels = levels
        self.n_jobs = n_jobs

    def _validate_common(self):
        super()._validate_common()
        levels = [tuple(int(v) for v in lv) for lv in self.levels]
        if not levels or any(len(lv) != 2 or min(lv) < 0 for lv in levels):
            raise ValueError("levels must be pairs of non-negative integers")
        self.levels_ = levels

    def _row(self, row):
        eta = float(row[0])
        if eta == 0.0:
            raise DomainError("Fock rates need eta > 0")
        vals, methods = [], []
        for ni, nj in self.levels_:
            v, m = gamma_fock_smallxi(ni, nj, eta, self.factors_, return_method=True)
            vals.append(v)
            methods.append(m)
        return vals, methods

    def transform(self, X):
        return self.transform_with_methods(X)[0]

    def transform_with_methods(self, X):
        X = self._check(X)
        rows = _map_rows(self._row, list(X), self.n_jobs)
        values = np.array([r[0] for r in rows], dtype=float).reshape(-1, len(self.levels_))
        return values, [r[1] for r in rows]

    def get_feature_names_out(self, input_features=None):
        return np.array([f"gamma_n{a}_n{b}" for a, b in self.levels_], dtype=object)

