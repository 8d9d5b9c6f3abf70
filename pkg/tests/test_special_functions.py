import math
from fractions import Fraction
from math import comb, factorial

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motional_dipoles.exceptions import CapacityError, DomainError, PrecisionError
from motional_dipoles.special_functions import (
    hermite,
    hyp2f2,
    hyp2f2_partial_sums,
    laguerre,
    laguerre_product_coeffs,
    re_erf_complex,
    re_erf_complex_scaled,
)

# 200-term Taylor series of erf at the origin, 40 digits
RE_ERF_1_1 = 1.3161512816979476
# 5000-term series, 40 digits
HYP_32_3_1_52_M4 = -0.05415705993946143


def _mp_re_erf(a, b):
    with mp.workdps(40):
        z = mp.mpc(a, b)
        s = mp.mpf(0)
        for n in range(200):
            s += (-1) ** n * z ** (2 * n + 1) / (mp.factorial(n) * (2 * n + 1))
        return float(mp.re(2 / mp.sqrt(mp.pi) * s))


def _laguerre_exact(n, alpha, x):
    x = Fraction(x)
    return sum(Fraction((-1) ** k * comb(n + alpha, n - k), factorial(k)) * x**k for k in range(n + 1))


def _hermite_exact(n, x):
    x = Fraction(x)
    return sum(
        (-1) ** m * Fraction(factorial(n), factorial(m) * factorial(n - 2 * m)) * (2 * x) ** (n - 2 * m)
        for m in range(n // 2 + 1)
    )


def _mp_hyp(a1, a2, b1, b2, x, terms=5000):
    with mp.workdps(250):
        a1, a2, b1, b2, x = (mp.mpf(v) for v in (a1, a2, b1, b2, x))
        t, s = mp.mpf(1), mp.mpf(0)
        for k in range(terms):
            s += t
            t *= (a1 + k) * (a2 + k) / ((b1 + k) * (b2 + k)) * x / (k + 1)
        return float(s)


class TestErf:
    def test_real_axis(self):
        for a in [-2.0, -0.3, 0.0, 0.7, 4.0]:
            assert re_erf_complex(a, 0.0) == pytest.approx(math.erf(a), abs=1e-15)

    def test_imaginary_axis_is_zero(self):
        assert re_erf_complex(0.0, 3.0) == 0.0
        assert re_erf_complex_scaled(0.0, 30.0) == 0.0

    def test_series_oracle(self):
        assert re_erf_complex(1.0, 1.0) == pytest.approx(RE_ERF_1_1, rel=1e-14)
        for a, b in [(0.5, 2.0), (2.0, 0.5), (1.5, -1.2)]:
            assert re_erf_complex(a, b) == pytest.approx(_mp_re_erf(a, b), rel=1e-12)

    @given(st.floats(-6, 6), st.floats(-6, 6))
    @settings(max_examples=100)
    def test_scaled_matches_mpmath(self, a, b):
        with mp.workdps(40):
            ref = float(mp.exp(-mp.mpf(b) ** 2) * mp.re(mp.erf(mp.mpc(a, b))))
        assert re_erf_complex_scaled(a, b) == pytest.approx(ref, rel=1e-11, abs=1e-15)

    def test_scaled_is_finite_far_out(self):
        val = re_erf_complex_scaled(3.0, 60.0)
        assert np.isfinite(val)
        with mp.workdps(40):
            ref = float(mp.exp(-mp.mpf(3600)) * mp.re(mp.erf(mp.mpc(3, 60))))
        assert val == pytest.approx(ref, rel=1e-10)
        assert math.isinf(re_erf_complex(3.0, 60.0))

    def test_nan(self):
        with pytest.raises(DomainError):
            re_erf_complex(float("nan"), 1.0)


class TestPolynomials:
    def test_trivial(self):
        assert laguerre(0, 3, 2.5) == 1.0
        assert laguerre(1, 0, 2.5) == pytest.approx(-1.5)
        assert hermite(0, 1.7) == 1.0
        assert hermite(1, 1.7) == pytest.approx(3.4)

    def test_monomial_oracle(self):
        assert laguerre(5, 2, 3.7) == pytest.approx(float(_laguerre_exact(5, 2, Fraction(37, 10))), rel=1e-14)
        assert hermite(6, 1.3) == pytest.approx(float(_hermite_exact(6, Fraction(13, 10))), rel=1e-14)

    @pytest.mark.parametrize("n", range(11))
    def test_recurrences_up_to_ten(self, n):
        for x in [0.0, 0.4, 2.2, 7.5]:
            for alpha in (0, 1, 3):
                assert laguerre(n, alpha, x) == pytest.approx(float(_laguerre_exact(n, alpha, x)), rel=1e-12, abs=1e-12)
            assert hermite(n, x) == pytest.approx(float(_hermite_exact(n, x)), rel=1e-12, abs=1e-12)

    def test_negative_degree(self):
        with pytest.raises(DomainError):
            laguerre(-1, 0, 1.0)
        with pytest.raises(DomainError):
            hermite(-1, 1.0)


class TestLinearization:
    @staticmethod
    def _coeffs_by_algebra(ni, nj):
        """Expand L_ni L_nj in the L_l basis by back-substitution on monomials."""
        prod = [Fraction(0)] * (ni + nj + 1)
        a = [Fraction((-1) ** k * comb(ni, k), factorial(k)) for k in range(ni + 1)]
        b = [Fraction((-1) ** k * comb(nj, k), factorial(k)) for k in range(nj + 1)]
        for i, x in enumerate(a):
            for j, y in enumerate(b):
                prod[i + j] += x * y
        out = {}
        for ell in range(ni + nj, -1, -1):
            lead = Fraction((-1) ** ell, factorial(ell))
            c = prod[ell] / lead
            if c:
                out[ell] = c
                for k in range(ell + 1):
                    prod[k] -= c * Fraction((-1) ** k * comb(ell, k), factorial(k))
        assert not any(prod)
        return out

    def test_examples(self):
        assert laguerre_product_coeffs(0, 0).coeffs == {0: 1}
        assert laguerre_product_coeffs(1, 1).coeffs == {0: 1, 1: -2, 2: 2}
        assert laguerre_product_coeffs(2, 1).coeffs == self._coeffs_by_algebra(2, 1)

    @pytest.mark.parametrize("ni", range(9))
    def test_exact_up_to_eight(self, ni):
        for nj in range(9):
            lin = laguerre_product_coeffs(ni, nj)
            nonzero = {k: v for k, v in lin.coeffs.items() if v != 0}
            assert nonzero == self._coeffs_by_algebra(ni, nj)

    def test_numeric_spot_check(self):
        lin = laguerre_product_coeffs(7, 4)
        for x in [0.1, 2.0, 6.3]:
            direct = laguerre(7, 0, x) * laguerre(4, 0, x)
            assert lin(x) == pytest.approx(direct, rel=1e-9, abs=1e-12)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            laguerre_product_coeffs(40, 30)


class TestHyp2F2:
    def test_trivial(self):
        assert hyp2f2(0.3, 2.0, 1.5, 4.0, 0.0) == 1.0

    def test_cancellation_reduces_to_1f1(self):
        for x in [-0.5, -3.0, -12.0]:
            assert hyp2f2(1.5, 1.0, 1.0, 2.5, x) == pytest.approx(float(mp.hyp1f1(1.5, 2.5, x)), rel=1e-12)

    def test_high_precision_oracle(self):
        assert hyp2f2(1.5, 3, 1, 2.5, -4.0) == pytest.approx(HYP_32_3_1_52_M4, rel=1e-13)

    @pytest.mark.parametrize("x", [-1.0, -25.0, -100.0, -300.0])
    def test_large_negative_argument(self, x):
        for a1, a2, b1, b2 in [(0.5, 3, 1, 1.5), (1.5, 8, 1, 2.5)]:
            ref = _mp_hyp(a1, a2, b1, b2, x, terms=3000)
            assert hyp2f2(a1, a2, b1, b2, x) == pytest.approx(ref, rel=1e-10)

    def test_partial_sums_bracket(self):
        sums = hyp2f2_partial_sums(1.5, 3, 1, 2.5, -4.0, 80)
        tail = sums[40:]
        assert min(tail) <= HYP_32_3_1_52_M4 <= max(tail)

    def test_non_convergence_carries_partial_sum(self):
        with pytest.raises(PrecisionError) as info:
            hyp2f2(0.5, 1, 1, 1.5, -2000.0, max_terms=50)
        assert info.value.partial is not None

    def test_domain(self):
        with pytest.raises(DomainError):
            hyp2f2(1, 1, -2, 1, -1.0)
        with pytest.raises(DomainError):
            hyp2f2(1, 1, 1, 1, 0.5)
