import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from motional_dipoles import lindblad
from motional_dipoles.coefficients import CoefficientSet
from motional_dipoles.exceptions import CapacityError, DomainError, StiffnessError
from motional_dipoles.lindblad import (
    MasterEquation,
    build_hamiltonian,
    check_density_matrix,
    evolve,
    excited_state,
    ground_state,
    lindblad_rhs,
    lowering_operators,
    observables,
    pure_state,
    single_excitation_state,
)

SQ2 = np.sqrt(0.5)


def _coeffs(gamma, delta=None):
    gamma = np.asarray(gamma, dtype=float)
    return CoefficientSet(gamma, np.zeros_like(gamma) if delta is None else np.asarray(delta, dtype=float))


def _pair(g12, d12=0.0):
    return _coeffs([[1.0, g12], [g12, 1.0]], [[0.0, d12], [d12, 0.0]])


def _jump_liouvillian(gamma, delta):
    """Oracle: diagonalize gamma into independent jump channels and build the
    generator on row-stacked vec(rho) from single-atom Pauli matrices."""
    n = gamma.shape[0]
    sm = np.array([[0.0, 1.0], [0.0, 0.0]])

    def local(op, i):
        out = np.array([[1.0]])
        for k in range(n):
            out = np.kron(out, op if k == i else np.eye(2))
        return out

    s = [local(sm, i) for i in range(n)]
    dim = 2**n
    eye = np.eye(dim)
    h = np.zeros((dim, dim))
    for i in range(n):
        for j in range(n):
            if i != j:
                h = h + delta[i, j] * s[i].T @ s[j]
    # row-stacking: vec(A rho B) = kron(A, B^T) vec(rho)
    gen = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    lam, u = np.linalg.eigh(gamma)
    for k in range(n):
        jump = sum(u[j, k] * s[j] for j in range(n))
        jd = jump.conj().T
        gen += lam[k] * (np.kron(jump, jump.conj()) - 0.5 * np.kron(jd @ jump, eye) - 0.5 * np.kron(eye, (jd @ jump).T))
    return gen


def _random_psd_gamma(rng, n):
    a = rng.normal(size=(n, n))
    g = a @ a.T
    d = np.sqrt(np.diag(g))
    return g / np.outer(d, d)


def _random_state(rng, n):
    a = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


class TestOperators:
    def test_lowering_operators(self):
        s0, s1 = lowering_operators(2)
        # |e g> = index 2, |g e> = index 1, atom 0 most significant
        assert s0[0, 2] == 1 and s1[0, 1] == 1
        assert np.allclose(s0 @ s1, s1 @ s0)
        with pytest.raises(CapacityError):
            lowering_operators(7)

    def test_states(self):
        assert ground_state(2)[0, 0] == 1 and excited_state(2)[3, 3] == 1
        rho = single_excitation_state([1.0, -1.0])
        assert rho[1, 1] == pytest.approx(0.5) and rho[1, 2] == pytest.approx(-0.5)
        with pytest.raises(DomainError):
            pure_state(np.zeros(4))
        with pytest.raises(DomainError):
            pure_state(np.ones(3))

    def test_density_matrix_checks(self):
        with pytest.raises(DomainError):
            check_density_matrix(np.eye(4))
        with pytest.raises(DomainError):
            check_density_matrix(np.array([[0.5, 0.1], [0.2, 0.5]]))
        with pytest.raises(CapacityError):
            check_density_matrix(np.eye(128) / 128)


class TestHamiltonian:
    def test_two_atoms(self):
        h = build_hamiltonian([[0.0, 0.7], [0.7, 0.0]])
        assert h[1, 2] == 0.7 and h[2, 1] == 0.7
        assert np.allclose(np.linalg.eigvalsh(h[1:3, 1:3]), [-0.7, 0.7])

    def test_zero(self):
        assert not build_hamiltonian(np.zeros((3, 3))).any()

    def test_three_atoms_one_excitation(self):
        d = 0.4
        h = build_hamiltonian(d * (np.ones((3, 3)) - np.eye(3)))
        sector = [1, 2, 4]
        block = h[np.ix_(sector, sector)]
        assert np.allclose(block, d * (np.ones((3, 3)) - np.eye(3)))
        assert np.allclose(np.linalg.eigvalsh(block), [-d, -d, 2 * d])
        assert np.allclose(h, h.conj().T)

    def test_validation(self):
        with pytest.raises(DomainError):
            build_hamiltonian([[0.1, 0.0], [0.0, 0.0]])
        with pytest.raises(DomainError):
            build_hamiltonian([[0.0, 0.1], [0.2, 0.0]])


class TestGenerator:
    def test_examples(self):
        cs = _pair(0.3, 0.8)
        assert not lindblad_rhs(ground_state(2), cs).any()
        one = _coeffs([[1.0]])
        assert lindblad_rhs(excited_state(1), one)[1, 1] == pytest.approx(-1.0)
        dark = single_excitation_state([SQ2, -SQ2])
        assert np.abs(lindblad_rhs(dark, _pair(1.0))).max() < 1e-15

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_matches_jump_oracle(self, n):
        rng = np.random.default_rng(7 + n)
        gamma = _random_psd_gamma(rng, n)
        delta = rng.normal(size=(n, n))
        delta = delta + delta.T
        np.fill_diagonal(delta, 0.0)
        rho = _random_state(rng, n)
        ref = (_jump_liouvillian(gamma, delta) @ rho.ravel()).reshape(rho.shape)
        assert np.allclose(lindblad_rhs(rho, _coeffs(gamma, delta)), ref, atol=1e-13)

    @given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
    @settings(max_examples=30, deadline=None)
    def test_linearity_trace_hermiticity(self, seed, a, b):
        rng = np.random.default_rng(seed)
        n = 3
        gamma = _random_psd_gamma(rng, n)
        delta = rng.normal(size=(n, n))
        eq = MasterEquation(gamma, np.triu(delta, 1) + np.triu(delta, 1).T)
        r1, r2 = _random_state(rng, n), _random_state(rng, n)
        out = eq.rhs(a * r1 + b * r2)
        assert np.allclose(out, a * eq.rhs(r1) + b * eq.rhs(r2), atol=1e-12)
        d1 = eq.rhs(r1)
        assert abs(np.trace(d1)) < 1e-12
        assert np.abs(d1 - d1.conj().T).max() < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            lindblad_rhs(ground_state(3), _pair(0.2))
        with pytest.raises(DomainError):
            MasterEquation(np.eye(2), np.zeros((3, 3)))


class TestEvolution:
    def test_single_atom(self):
        tr = evolve(excited_state(1), _coeffs([[1.0]]), 10.0, reltol=1e-8)
        assert np.abs(tr.populations[:, 0] - np.exp(-tr.times)).max() < 1e-6
        assert tr.metadata["trace_drift"] < 1e-8
        assert len(tr.times) == 101 and tr.times[-1] == 10.0

    @pytest.mark.parametrize("g12", [1.0, 0.5, -0.3])
    def test_symmetric_and_antisymmetric_rates(self, g12):
        t = np.linspace(0.0, 4.0, 9)
        for sign in (1, -1):
            rho0 = single_excitation_state([SQ2, sign * SQ2])
            tr = evolve(rho0, _pair(g12, 0.4), 4.0, times=t)
            total = tr.populations.sum(axis=1)
            assert np.abs(total - np.exp(-(1.0 + sign * g12) * t)).max() < 1e-7
        dark = evolve(single_excitation_state([SQ2, -SQ2]), _pair(1.0), 4.0)
        assert np.abs(dark.emission_rate).max() < 1e-10

    @pytest.mark.parametrize("n", [2, 3])
    def test_matches_matrix_exponential(self, n):
        rng = np.random.default_rng(100 + n)
        gamma = _random_psd_gamma(rng, n)
        delta = rng.uniform(-1, 1, size=(n, n))
        delta = np.triu(delta, 1) + np.triu(delta, 1).T
        rho0 = _random_state(rng, n)
        tr = evolve(rho0, _coeffs(gamma, delta), 1.0, reltol=1e-10, times=[0.0, 1.0])
        ref = (expm(_jump_liouvillian(gamma, delta)) @ rho0.ravel()).reshape(rho0.shape)
        assert np.abs(tr.states[-1] - ref).max() < 1e-7

    def test_trajectory_invariants(self):
        rng = np.random.default_rng(3)
        gamma = _random_psd_gamma(rng, 3)
        tr = evolve(excited_state(3), _coeffs(gamma), 10.0, reltol=1e-8)
        assert tr.metadata["trace_drift"] < 1e-8
        for rho in tr.states:
            assert np.abs(rho - rho.conj().T).max() < 1e-10
            assert np.linalg.eigvalsh(rho).min() > -1e-7
        assert np.all(np.diff(tr.times) > 0)
        assert tr.metadata["gamma_min_eigenvalue"] == pytest.approx(np.linalg.eigvalsh(gamma).min())

    def test_stiffness(self, monkeypatch):
        class Failed:
            status, t, message, y, nfev = -1, np.array([0.25]), "step size too small", None, 0

        monkeypatch.setattr(lindblad, "solve_ivp", lambda *a, **k: Failed())
        with pytest.raises(StiffnessError):
            evolve(excited_state(1), _coeffs([[1.0]]), 1.0)

    def test_validation(self):
        one = _coeffs([[1.0]])
        with pytest.raises(DomainError):
            evolve(excited_state(1), one, 0.0)
        with pytest.raises(DomainError):
            evolve(excited_state(2), one, 1.0)
        with pytest.raises(DomainError):
            evolve(excited_state(1), one, 1.0, times=[0.5, 0.2])
        with pytest.raises(DomainError):
            evolve(excited_state(1), one, 1.0, times=[0.0, 2.0])


class TestObservables:
    def test_examples(self):
        obs = observables(ground_state(2), _pair(0.4))
        assert not obs.populations.any() and obs.emission_rate == 0.0 and obs.purity == pytest.approx(1.0)
        assert observables(excited_state(1), _coeffs([[1.0]])).emission_rate == pytest.approx(1.0)
        bright = single_excitation_state([SQ2, SQ2])
        assert observables(bright, _pair(1.0)).emission_rate == pytest.approx(2.0)
        assert np.allclose(observables(bright, _pair(1.0)).populations, [0.5, 0.5])
        with pytest.raises(DomainError):
            observables(ground_state(3), _pair(0.4))

    def test_emission_nonnegative_for_psd_gamma(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            gamma = _random_psd_gamma(rng, 3)
            assert observables(_random_state(rng, 3), _coeffs(gamma)).emission_rate >= -1e-9

    def test_csv_export(self):
        tr = evolve(excited_state(2), _pair(0.5), 1.0, times=[0.0, 0.5, 1.0])
        buf = io.StringIO()
        tr.to_csv(buf, comments=["demo"])
        lines = buf.getvalue().splitlines()
        assert lines[0] == "# demo"
        assert lines[1] == "time,population_0,population_1,emission_rate,purity"
        assert len(lines) == 5
        first = [float(v) for v in lines[2].split(",")]
        assert first == [0.0, 1.0, 1.0, 2.0, 1.0]
