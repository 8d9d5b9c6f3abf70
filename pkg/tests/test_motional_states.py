import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motional_dipoles.exceptions import DomainError, PauliViolationError, UnsupportedOverlapError
from motional_dipoles.motional_states import (
    Ensemble,
    Fock,
    Gaussian,
    PointLike,
    Statistics,
    Thermal,
    overlap,
    position_overlap,
    wavefunction,
)
from motional_dipoles.special_functions import laguerre

KZ = np.linspace(-3.0, 3.0, 13)


def _grid_overlap(a, b, kz, half_width=40.0, n=8001):
    """Oracle: direct trapezoid integration of exp(i kz z) phi_a(z) phi_b(z)."""
    z = np.linspace(-half_width, half_width, n)
    prod = wavefunction(a, z) * wavefunction(b, z)
    return np.trapezoid(np.exp(1j * np.outer(kz, z)) * prod, z, axis=1)


states = st.one_of(
    st.builds(Gaussian, st.floats(-3, 3), st.floats(0.2, 2.0)),
    st.builds(Fock, st.integers(0, 6), st.just(0.0), st.floats(0.2, 2.0)),
)


def test_normalization_at_zero():
    for s in [PointLike(1.2), Gaussian(0.4, 0.7), Fock(3, 0.0, 1.1), Thermal(2.0, 0.5)]:
        assert overlap(s, s, 0.0) == pytest.approx(1.0, abs=1e-15)


def test_gaussian_overlap_formula():
    ell = 0.8
    assert np.allclose(overlap(Gaussian(0, ell), Gaussian(0, ell), KZ), np.exp(-(KZ**2) * ell**2 / 2))


def test_fock_overlap_formula_and_grid_oracle():
    ell = 0.9
    s = Fock(2, 0.0, ell)
    x = (KZ * ell) ** 2
    assert np.allclose(overlap(s, s, KZ), np.exp(-x / 2) * laguerre(2, 0, x), atol=1e-14)
    assert np.allclose(overlap(s, s, KZ), _grid_overlap(s, s, KZ), atol=1e-12)


@pytest.mark.parametrize("a, b", [
    (Fock(1, 0.5, 0.7), Fock(3, 0.5, 0.7)),
    (Fock(4, 0.0, 1.3), Fock(0, 0.0, 1.3)),
    (Gaussian(-1.0, 0.6), Gaussian(0.8, 0.6)),
    (Gaussian(0.0, 1.0), Fock(0, 0.0, 1.0)),
])
def test_off_diagonal_overlaps_against_grid(a, b):
    assert np.allclose(overlap(a, b, KZ), _grid_overlap(a, b, KZ), atol=1e-12)


def test_wavefunction_normalized():
    z = np.linspace(-30, 30, 6001)
    for s in [Gaussian(1.0, 0.5), Fock(5, -0.3, 1.2)]:
        assert np.trapezoid(wavefunction(s, z) ** 2, z) == pytest.approx(1.0, abs=1e-12)


@given(states, states, st.floats(-4, 4))
@settings(max_examples=100)
def test_overlap_bound_and_conjugation(a, b, kz):
    try:
        ab = overlap(a, b, kz)
        ba = overlap(b, a, -kz)
    except UnsupportedOverlapError:
        return
    assert abs(ab) <= 1.0 + 1e-12
    assert ab == pytest.approx(np.conj(ba), abs=1e-12)


def test_thermal_is_geometric_mixture_of_fock():
    nbar, ell = 1.5, 0.7
    total = np.zeros(KZ.shape, dtype=complex)
    for n in range(200):
        weight = nbar**n / (1 + nbar) ** (n + 1)
        total += weight * overlap(Fock(n, 0.0, ell), Fock(n, 0.0, ell), KZ)
    assert np.allclose(total, overlap(Thermal(nbar, ell), Thermal(nbar, ell), KZ), atol=1e-8)


def test_gaussian_equals_fock_zero():
    kz = np.array([0.3, 1.7])
    assert np.array_equal(overlap(Gaussian(0.0, 1.1), Gaussian(0.0, 1.1), kz),
                          overlap(Fock(0, 0.0, 1.1), Fock(0, 0.0, 1.1), kz))


def test_position_overlaps():
    ell = 0.9
    assert position_overlap(Gaussian(0, ell), Gaussian(0, ell)) == 1.0
    assert position_overlap(Gaussian(0, ell), Gaussian(2 * ell * math.sqrt(2), ell)) == pytest.approx(math.exp(-1))
    assert position_overlap(Fock(1, 0, ell), Fock(3, 0, ell)) == 0.0
    assert position_overlap(PointLike(0.0), PointLike(1.0)) == 0.0


def test_unsupported_pairs():
    with pytest.raises(UnsupportedOverlapError):
        overlap(Fock(1, 0.0, 1.0), Fock(1, 1.0, 1.0), 0.5)
    with pytest.raises(UnsupportedOverlapError):
        overlap(PointLike(0.0), Gaussian(0.0, 1.0), 0.5)
    with pytest.raises(UnsupportedOverlapError):
        overlap(Gaussian(0.0, 1.0), Gaussian(0.0, 2.0), 0.5)


def test_state_validation():
    with pytest.raises(DomainError):
        Gaussian(0.0, 0.0)
    with pytest.raises(DomainError):
        Fock(1.5)
    with pytest.raises(DomainError):
        Thermal(-1.0)
    assert Thermal(3.0, 0.5).effective_width == pytest.approx(0.5 * math.sqrt(7.0))


def test_ensemble_validation():
    ens = Ensemble.mixture([[Gaussian(0, 1), Gaussian(2, 1)], [Gaussian(0, 1), Gaussian(3, 1)]], [0.25, 0.75])
    assert ens.n_atoms == 2 and ens.statistics is Statistics.SEPARABLE
    with pytest.raises(DomainError):
        Ensemble.mixture([[Gaussian(0, 1)]], [0.5])
    with pytest.raises(PauliViolationError):
        Ensemble.antisymmetric([Gaussian(0, 1), Fock(0, 0, 1)])
    with pytest.raises(UnsupportedOverlapError):
        Ensemble.symmetric([Thermal(1.0), Thermal(1.0)])
    with pytest.raises(DomainError):
        Ensemble.symmetric([Gaussian(0, 1), Gaussian(1, 2)])
