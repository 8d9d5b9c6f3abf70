"""Motional correlation functions ``C_ij(kz) = <exp(i kz (z_i - z_j))>``.

Three ensembles are supported: separable mixtures of product states,
(anti)symmetrized product states, and the condensate special case where
every atom occupies the same state.  All evaluators are vectorized over
``kz`` and satisfy ``C(0) = 1`` and ``C(-kz) = conj(C(kz))``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import CapacityError, DomainError, PauliViolationError
from .motional_states import Ensemble, Statistics, overlap, position_overlap

__all__ = [
    "MAX_SYMMETRIZED_ATOMS",
    "PermutationWeight",
    "PermutationTensor",
    "permutation_tensor",
    "permutation_weights",
    "gram_matrix",
    "CorrelationEvaluator",
    "SeparableCorrelation",
    "SymmetrizedCorrelation",
    "BECCorrelation",
    "correlation_evaluator",
    "corr_separable",
    "corr_symmetrized",
    "corr_bec",
]

MAX_SYMMETRIZED_ATOMS = 6
DENOMINATOR_FLOOR = 1e-14
ILL_CONDITIONED = 1e8


class PermutationWeight(NamedTuple):
    pi: tuple
    pi_prime: tuple
    weight: float


def gram_matrix(states) -> np.ndarray:
    """``G[a, b] = <phi_a|phi_b>`` for a list of single-atom states."""
    n = len(states)
    g = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            g[a, b] = g[b, a] = position_overlap(states[a], states[b])
    return g


def _permutations(n, sign):
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    if sign > 0:
        return perms, np.ones(len(perms))
    # parity from the inversion count
    inv = np.zeros(len(perms), dtype=np.intp)
    for a in range(n):
        for b in range(a + 1, n):
            inv += perms[:, a] > perms[:, b]
    return perms, np.where(inv % 2 == 0, 1.0, -1.0)


def _overlap_products(gram, perms, columns):
    """``prod_{n in columns} G[pi'(n), pi(n)]`` for every pair (pi, pi')."""
    out = np.ones((len(perms), len(perms)))
    for n in columns:
        out *= gram[perms[None, :, n], perms[:, None, n]]
    return out


@dataclass(frozen=True)
class PermutationTensor:
    """Permutation weights of one atom pair, aggregated by overlap indices.

    ``lam[a, b, c, d]`` is the sum of ``lambda_ij^{pi pi'}`` over every pair
    ``(pi, pi')`` with ``pi(i) = a``, ``pi'(i) = b``, ``pi(j) = c``,
    ``pi'(j) = d``.  ``norm`` is the (anti)symmetrizer normalization divided
    by ``N!`` and ``condition`` the condition number of the Gram matrix.
    """

    lam: np.ndarray
    norm: float
    condition: float
    ill_conditioned: bool = field(default=False)

    def nonzero(self):
        idx = np.argwhere(self.lam != 0.0)
        return [(tuple(int(v) for v in k), float(self.lam[tuple(k)])) for k in idx]


def _check_size(n):
    if n > MAX_SYMMETRIZED_ATOMS:
        raise CapacityError(
            f"exact permutation sums are limited to N <= {MAX_SYMMETRIZED_ATOMS} (got {n})"
        )


def permutation_tensor(gram, i: int, j: int, sign: int) -> PermutationTensor:
    gram = np.asarray(gram, dtype=float)
    n = gram.shape[0]
    _check_size(n)
    perms, s = _permutations(n, sign)
    ss = s[:, None] * s[None, :]
    full = ss * _overlap_products(gram, perms, range(n))
    denom = full.sum()
    norm = denom / math.factorial(n)
    if abs(norm) < DENOMINATOR_FLOOR:
        raise PauliViolationError(
            f"(anti)symmetrizer normalization vanishes ({norm:.3e}); states are degenerate"
        )
    others = [m for m in range(n) if m not in (i, j)]
    lam = ss * _overlap_products(gram, perms, others) / denom
    key = (
        ((perms[:, None, i] * n + perms[None, :, i]) * n + perms[:, None, j]) * n
        + perms[None, :, j]
    )
    tensor = np.zeros(n**4)
    np.add.at(tensor, key.ravel(), lam.ravel())
    cond = float(np.linalg.cond(gram))
    flagged = not cond < ILL_CONDITIONED
    if flagged:
        warnings.warn(
            f"Gram matrix condition number {cond:.2e} exceeds {ILL_CONDITIONED:.0e}",
            RuntimeWarning,
            stacklevel=2,
        )
    return PermutationTensor(tensor.reshape((n,) * 4), float(norm), cond, flagged)


def permutation_weights(ensemble: Ensemble, i: int, j: int) -> list:
    """Every ``lambda_ij^{pi pi'}`` as an explicit list (small ``N`` only)."""
    states = ensemble.states
    n = len(states)
    _check_size(n)
    sign = ensemble.statistics.sign
    gram = gram_matrix(states)
    perms, s = _permutations(n, sign)
    ss = s[:, None] * s[None, :]
    denom = (ss * _overlap_products(gram, perms, range(n))).sum()
    if abs(denom / math.factorial(n)) < DENOMINATOR_FLOOR:
        raise PauliViolationError("(anti)symmetrizer normalization vanishes")
    lam = ss * _overlap_products(gram, perms, [m for m in range(n) if m not in (i, j)]) / denom
    return [
        PermutationWeight(tuple(perms[a]), tuple(perms[b]), float(lam[a, b]))
        for a in range(len(perms))
        for b in range(len(perms))
    ]


class CorrelationEvaluator:
    """Callable ``kz -> C_ij(kz)`` for a fixed ensemble and atom pair."""

    def __init__(self, ensemble: Ensemble, i: int, j: int):
        n = ensemble.n_atoms
        if not (0 <= i < n and 0 <= j < n):
            raise DomainError(f"atom indices ({i}, {j}) out of range for N = {n}")
        self.ensemble = ensemble
        self.pair = (i, j)

    def __call__(self, kz):
        kz = np.asarray(kz, dtype=float)
        if self.pair[0] == self.pair[1]:
            return np.ones(kz.shape, dtype=complex)
        return self._evaluate(kz)

    def _evaluate(self, kz):
        raise NotImplementedError


class SeparableCorrelation(CorrelationEvaluator):
    def __init__(self, ensemble, i, j):
        if ensemble.statistics is not Statistics.SEPARABLE:
            raise DomainError("separable correlation needs a separable ensemble")
        super().__init__(ensemble, i, j)

    def _evaluate(self, kz):
        i, j = self.pair
        out = np.zeros(kz.shape, dtype=complex)
        for p, branch in zip(self.ensemble.weights, self.ensemble.branches):
            if p == 0.0:
                continue
            out += p * overlap(branch[i], branch[i], kz) * overlap(branch[j], branch[j], -kz)
        return out


class SymmetrizedCorrelation(CorrelationEvaluator):
    def __init__(self, ensemble, i, j):
        if ensemble.statistics is Statistics.SEPARABLE:
            raise DomainError("symmetrized correlation needs a (anti)symmetric ensemble")
        super().__init__(ensemble, i, j)
        if i != j:
            self.weights = permutation_tensor(
                gram_matrix(ensemble.states), i, j, ensemble.statistics.sign
            )
            self.terms = self.weights.nonzero()
        else:
            self.weights, self.terms = None, []

    def _evaluate(self, kz):
        states = self.ensemble.states
        cache = {}

        def ov(a, b, sgn):
            key = (a, b, sgn)
            if key not in cache:
                cache[key] = overlap(states[a], states[b], sgn * kz)
            return cache[key]

        out = np.zeros(kz.shape, dtype=complex)
        for (a, b, c, d), lam in self.terms:
            out += lam * ov(a, b, 1) * ov(c, d, -1)
        return out


class BECCorrelation:
    """All atoms in one state: ``C(kz) = |I_00(kz)|^2``."""

    def __init__(self, state):
        self.state = state

    def __call__(self, kz):
        return np.abs(overlap(self.state, self.state, kz)) ** 2 + 0j


def correlation_evaluator(ensemble: Ensemble, i: int, j: int) -> CorrelationEvaluator:
    if ensemble.statistics is Statistics.SEPARABLE:
        return SeparableCorrelation(ensemble, i, j)
    return SymmetrizedCorrelation(ensemble, i, j)


def corr_separable(ensemble: Ensemble, i: int, j: int, kz):
    if i == j:
        raise DomainError("corr_separable needs two distinct atoms")
    return SeparableCorrelation(ensemble, i, j)(kz)


def corr_symmetrized(ensemble: Ensemble, i: int, j: int, kz, sign: int | None = None):
    if i == j:
        raise DomainError("corr_symmetrized needs two distinct atoms")
    if sign is not None and sign != ensemble.statistics.sign:
        raise DomainError("requested exchange sign does not match the ensemble statistics")
    return SymmetrizedCorrelation(ensemble, i, j)(kz)


def corr_bec(state, kz):
    return np.real(BECCorrelation(state)(kz))
