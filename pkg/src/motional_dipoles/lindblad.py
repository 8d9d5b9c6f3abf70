"""Master equation for the internal (electronic) state of ``N`` two-level atoms.

    d rho/dt = -i [H, rho] + sum_ij gamma_ij (s_j rho s_i^+ - 1/2 {s_i^+ s_j, rho})

with ``H = sum_{i != j} delta_ij s_i^+ s_j``.  Time is in units of ``1/gamma0``.

Basis convention: ``|g> = 0``, ``|e> = 1`` for every atom, atom 0 is the
leftmost (most significant) tensor factor.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from .exceptions import CapacityError, DomainError, StiffnessError

__all__ = [
    "MAX_ATOMS",
    "lowering_operators",
    "ground_state",
    "excited_state",
    "pure_state",
    "single_excitation_state",
    "check_density_matrix",
    "build_hamiltonian",
    "MasterEquation",
    "lindblad_rhs",
    "Observables",
    "observables",
    "Trajectory",
    "evolve",
]

MAX_ATOMS = 6
log = logging.getLogger(__name__)

_SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]])


def _n_atoms(dim):
    n = int(round(math.log2(dim))) if dim > 0 else -1
    if n < 1 or 2**n != dim:
        raise DomainError(f"dimension {dim} is not a power of two")
    if n > MAX_ATOMS:
        raise CapacityError(f"at most {MAX_ATOMS} atoms are supported (got {n})")
    return n


@lru_cache(maxsize=None)
def lowering_operators(n: int) -> tuple:
    """``s_i`` (lowering operator of atom ``i``) on the ``2**n`` space."""
    if not 1 <= n <= MAX_ATOMS:
        raise CapacityError(f"at most {MAX_ATOMS} atoms are supported (got {n})")
    ops = []
    for i in range(n):
        op = np.array([[1.0]])
        for k in range(n):
            op = np.kron(op, _SIGMA_MINUS if k == i else np.eye(2))
        op.setflags(write=False)
        ops.append(op)
    return tuple(ops)


def _projector(psi):
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def ground_state(n: int) -> np.ndarray:
    psi = np.zeros(2**n)
    psi[0] = 1.0
    return _projector(psi)


def excited_state(n: int) -> np.ndarray:
    psi = np.zeros(2**n)
    psi[-1] = 1.0
    return _projector(psi)


def pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    _n_atoms(psi.size)
    if np.linalg.norm(psi) == 0:
        raise DomainError("state vector is zero")
    return _projector(psi)


def single_excitation_state(amplitudes) -> np.ndarray:
    """``sum_i a_i |e_i>`` (atom ``i`` excited, others in the ground state)."""
    amps = np.asarray(amplitudes, dtype=complex)
    n = amps.size
    psi = np.zeros(2**n, dtype=complex)
    for i, a in enumerate(amps):
        psi[1 << (n - 1 - i)] = a
    return pure_state(psi)


def check_density_matrix(rho, *, tol: float = 1e-10) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DomainError("density matrix must be square")
    _n_atoms(rho.shape[0])
    if np.abs(rho - rho.conj().T).max() > tol:
        raise DomainError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise DomainError("density matrix must have unit trace")
    return rho


def _check_matrix(m, name, n=None):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"{name} must be a square matrix")
    if n is not None and m.shape[0] != n:
        raise DomainError(f"{name} is {m.shape[0]}x{m.shape[0]}, expected {n}x{n}")
    if np.abs(m - m.T).max() > 1e-12 * max(1.0, np.abs(m).max()):
        raise DomainError(f"{name} must be symmetric")
    return m


def build_hamiltonian(delta) -> np.ndarray:
    """``H = sum_{i != j} delta_ij s_i^+ s_j`` in units of ``gamma0``."""
    delta = _check_matrix(delta, "delta")
    if np.any(np.diag(delta) != 0.0):
        raise DomainError("delta must have a zero diagonal")
    n = delta.shape[0]
    ops = lowering_operators(n)
    h = np.zeros((2**n, 2**n))
    for i in range(n):
        for j in range(n):
            if i != j and delta[i, j] != 0.0:
                h += delta[i, j] * ops[i].T @ ops[j]
    return h


class MasterEquation:
    """Generator of the internal dynamics for fixed coefficient matrices.

    The dissipator is kept in its ``gamma_ij`` form: the jump part is grouped
    as ``sum_j s_j rho t_j^+`` with ``t_j = sum_i gamma_ij s_i``.
    """

    def __init__(self, gamma, delta):
        self.gamma = _check_matrix(gamma, "gamma")
        self.n_atoms = self.gamma.shape[0]
        self.delta = _check_matrix(delta, "delta", self.n_atoms)
        self.hamiltonian = build_hamiltonian(self.delta)
        ops = lowering_operators(self.n_atoms)
        self._lower = ops
        self._collective = [sum(self.gamma[i, j] * ops[i] for i in range(self.n_atoms)) for j in range(self.n_atoms)]
        # K = sum_ij gamma_ij s_i^+ s_j  (emission-rate operator)
        self.decay_operator = sum(ops[j].T @ self._collective[j] for j in range(self.n_atoms))
        self._effective = 1j * self.hamiltonian + 0.5 * self.decay_operator
        self.dim = 2**self.n_atoms

    @classmethod
    def from_coefficients(cls, coeffs) -> "MasterEquation":
        return cls(coeffs.gamma, coeffs.delta)

    def rhs(self, rho) -> np.ndarray:
        rho = np.asarray(rho)
        if rho.shape != (self.dim, self.dim):
            raise DomainError(f"density matrix shape {rho.shape} does not match {self.dim}x{self.dim}")
        g = self._effective
        out = -(g @ rho) - rho @ g.conj().T
        for s, t in zip(self._lower, self._collective):
            out += s @ rho @ t.T
        return out


def lindblad_rhs(rho, coeffs) -> np.ndarray:
    """Apply the master-equation generator to ``rho``."""
    return MasterEquation.from_coefficients(coeffs).rhs(rho)


class Observables(NamedTuple):
    populations: np.ndarray
    emission_rate: float
    purity: float


def _observables(rho, eq: MasterEquation) -> Observables:
    pops = np.array([np.real(np.trace(s.T @ s @ rho)) for s in eq._lower])
    emission = float(np.real(np.trace(eq.decay_operator @ rho)))
    purity = float(np.real(np.trace(rho @ rho)))
    return Observables(pops, emission, purity)


def observables(rho, coeffs) -> Observables:
    """Excited populations, total photon emission rate and purity."""
    eq = coeffs if isinstance(coeffs, MasterEquation) else MasterEquation.from_coefficients(coeffs)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (eq.dim, eq.dim):
        raise DomainError("density matrix does not match the coefficient set")
    return _observables(rho, eq)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    observables: tuple
    metadata: dict = field(default_factory=dict)

    @property
    def populations(self) -> np.ndarray:
        return np.array([o.populations for o in self.observables])

    @property
    def emission_rate(self) -> np.ndarray:
        return np.array([o.emission_rate for o in self.observables])

    @property
    def purity(self) -> np.ndarray:
        return np.array([o.purity for o in self.observables])

    def rows(self):
        for t, o in zip(self.times, self.observables):
            yield [float(t), *(float(p) for p in o.populations), o.emission_rate, o.purity]

    def header(self) -> list:
        n = len(self.observables[0].populations)
        return ["time", *(f"population_{i}" for i in range(n)), "emission_rate", "purity"]

    def to_csv(self, stream, comments=()):
        for line in comments:
            stream.write(f"# {line}\n")
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(self.header())
        for row in self.rows():
            writer.writerow([f"{v:.17g}" for v in row])


def evolve(rho0, coeffs, t_end: float, reltol: float = 1e-8, *, times=None, abstol: float | None = None) -> Trajectory:
    """Integrate the master equation with an adaptive Dormand-Prince 4(5) scheme.

    ``times`` are the snapshot times (default: 101 equally spaced points on
    ``[0, t_end]``).  The trace is not renormalized; its largest deviation
    from one is logged and stored in ``metadata["trace_drift"]``.
    """
    if not t_end > 0:
        raise DomainError("t_end must be positive")
    eq = coeffs if isinstance(coeffs, MasterEquation) else MasterEquation.from_coefficients(coeffs)
    rho0 = check_density_matrix(rho0)
    if rho0.shape != (eq.dim, eq.dim):
        raise DomainError("initial state does not match the coefficient set")
    if times is None:
        times = np.linspace(0.0, t_end, 101)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) <= 0):
        raise DomainError("snapshot times must be strictly increasing")
    if times[0] < 0 or times[-1] > t_end:
        raise DomainError("snapshot times must lie in [0, t_end]")
    if abstol is None:
        abstol = reltol * 1e-2
    dim = eq.dim

    def f(_t, y):
        return eq.rhs(y.reshape(dim, dim)).ravel()

    sol = solve_ivp(f, (0.0, t_end), rho0.ravel(), method="RK45", t_eval=times, rtol=reltol, atol=abstol)
    if sol.status != 0:
        raise StiffnessError(f"integration failed at t = {sol.t[-1] if sol.t.size else 0.0}: {sol.message}")
    states = sol.y.T.reshape(-1, dim, dim)
    drift = float(np.max(np.abs(np.trace(states, axis1=1, axis2=2) - 1.0)))
    log.info("trace drift over trajectory: %.3e", drift)
    gamma_min = float(np.linalg.eigvalsh(eq.gamma).min())
    obs = tuple(_observables(rho, eq) for rho in states)
    meta = {
        "trace_drift": drift,
        "gamma_min_eigenvalue": gamma_min,
        "n_evaluations": int(sol.nfev),
        "reltol": reltol,
        "abstol": abstol,
    }
    return Trajectory(sol.t.copy(), states, obs, meta)
