"""Airy function, zeros and normalised states against mpmath / scipy oracles."""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from confined_stark.errors import CapacityError, ParameterError, ResolutionError
from confined_stark.specfun import (AiryZeroTable, airy_ai, airy_ai_prime, airy_state,
                                    airy_state_profile, airy_zero, airy_zero_asymptotic,
                                    airy_zeros_below, zero_table)

mpmath.mp.dps = 30

# frozen from mpmath.airyaizero (independent of the package)
FROZEN_ZEROS = {1: 2.338107410459767, 2: 4.087949444130971, 3: 5.520559828095551,
                4: 6.786708090071759, 5: 7.944133587120853, 6: 9.022650853340980,
                10: 12.828776752865757, 20: 20.537332907677566}


def bisection_zero(k):
    """Independent oracle: sign scan of mpmath Ai with step 0.1, then bisection."""
    x, found = 0.0, 0
    f = lambda u: float(mpmath.airyai(-u))
    prev = f(x)
    while True:
        cur = f(x + 0.1)
        if prev * cur < 0:
            found += 1
            if found == k:
                lo, hi = x, x + 0.1
                while hi - lo > 1e-13:
                    mid = 0.5 * (lo + hi)
                    if f(mid) * f(lo) > 0:
                        lo = mid
                    else:
                        hi = mid
                return 0.5 * (lo + hi)
        x, prev = x + 0.1, cur


class TestAiryFunction:
    def test_value_at_zero(self):
        assert airy_ai(0.0) == pytest.approx(0.3550280539, abs=1e-10)
        exact = 3 ** (-2 / 3) / math.gamma(2 / 3)
        assert abs(airy_ai(0.0) - exact) < 1e-15

    def test_first_zero(self):
        assert abs(airy_ai(-2.338107)) < 1e-6

    def test_positive_tail(self):
        v = float(airy_ai(10.0))
        assert v > 0
        assert v == pytest.approx(float(mpmath.airyai(10)), rel=1e-10)
        assert v == pytest.approx(1.1e-10, rel=0.02)

    @pytest.mark.parametrize("x", np.linspace(-20, 20, 161))
    def test_against_mpmath_grid(self, x):
        assert abs(float(airy_ai(x)) - float(mpmath.airyai(x))) <= 1e-12
        assert abs(float(airy_ai_prime(x)) - float(mpmath.airyai(x, derivative=1))) <= 5e-11

    @settings(max_examples=200, deadline=None)
    @given(st.floats(min_value=-20, max_value=20, allow_nan=False))
    def test_against_scipy_random(self, x):
        assert abs(float(airy_ai(x)) - special.airy(x)[0]) <= 1e-12

    @pytest.mark.parametrize("x", [-60.0, -35.0, 25.0, 40.0])
    def test_asymptotic_branches(self, x):
        ref = float(mpmath.airyai(x))
        scale = max(abs(ref), 1e-300) if x > 0 else 1.0 / abs(x) ** 0.25
        assert abs(float(airy_ai(x)) - ref) <= 1e-12 * scale

    def test_vectorised(self):
        x = np.array([-3.0, 0.0, 3.0])
        assert airy_ai(x).shape == (3,)

    def test_rejects_nonfinite(self):
        with pytest.raises(ParameterError):
            airy_ai(float("nan"))


class TestZeros:
    def test_published_digits(self):
        assert round(airy_zero(1), 3) == 2.338

    @pytest.mark.parametrize("k", [1, 2])
    def test_bisection_oracle(self, k):
        assert abs(airy_zero(k) - bisection_zero(k)) <= 1e-9

    def test_examples(self):
        assert round(airy_zero(1), 6) == 2.338107
        assert round(airy_zero(2), 6) == 4.087949

    @pytest.mark.parametrize("k,z", sorted(FROZEN_ZEROS.items()))
    def test_frozen_values(self, k, z):
        assert abs(airy_zero(k) - z) <= 1e-9

    def test_table_against_mpmath(self):
        table = zero_table()
        assert table.capacity >= 50
        for k in range(1, 51):
            assert abs(table.zero(k) + float(mpmath.airyaizero(k))) <= 1e-9

    def test_capacity_error(self):
        with pytest.raises(CapacityError):
            airy_zero(51)
        with pytest.raises(CapacityError):
            airy_zero(0)
        big = zero_table(120)
        assert abs(airy_zero(100, big) + float(mpmath.airyaizero(100))) < 1e-9

    def test_sign_change_bracketing(self):
        z = zero_table().zeros
        eps = 1e-6
        assert np.all(airy_ai(-z + eps) * airy_ai(-z - eps) < 0)

    def test_table_immutable(self):
        with pytest.raises(ValueError):
            zero_table().zeros[0] = 1.0

    def test_build_rejects_bad_capacity(self):
        with pytest.raises(ParameterError):
            AiryZeroTable.build(0)

    def test_zeros_below(self):
        assert len(airy_zeros_below(10.0)) == 6  # z_5 = 7.944, z_6 = 9.023 < 10
        assert len(airy_zeros_below(7.0)) == 4
        assert airy_zeros_below(2.0).size == 0
        assert airy_zeros_below(-1.0).size == 0
        assert len(airy_zeros_below(60.0)) > 50  # grows the table on demand


class TestAsymptotic:
    @pytest.mark.parametrize("k", [1, 2, 5, 20, 50])
    def test_formula_high_precision(self, k):
        exact = (mpmath.mpf(1) / 4 * (3 * mpmath.pi) ** (mpmath.mpf(2) / 3)
                 * (4 * k - 1) ** (mpmath.mpf(2) / 3))
        assert airy_zero_asymptotic(k) == pytest.approx(float(exact), rel=1e-14)

    def test_frozen_values(self):
        assert airy_zero_asymptotic(1) == pytest.approx(2.3202508, abs=1e-7)
        assert airy_zero_asymptotic(5) == pytest.approx(7.9424867, abs=1e-7)
        assert airy_zero(5) == pytest.approx(7.94413, abs=1e-5)

    def test_relative_error_decreasing(self):
        rel = [abs(airy_zero(k) - airy_zero_asymptotic(k)) / airy_zero(k) for k in range(1, 51)]
        assert all(b < a for a, b in zip(rel, rel[1:]))
        assert rel[19] <= 5e-4

    def test_rejects_bad_index(self):
        with pytest.raises(ParameterError):
            airy_zero_asymptotic(0)


class TestStates:
    @pytest.mark.parametrize("k", [1, 2, 3, 7])
    def test_unit_norm_and_dirichlet(self, k):
        a = airy_state(k)
        assert a.l2_norm_check == pytest.approx(1.0, abs=1e-10)
        assert abs(float(a(0.0))) < 1e-10
        assert float(a(-1.0)) == 0.0

    def test_norm_against_mpmath(self):
        z = airy_zero(2)
        ref = mpmath.quad(lambda t: mpmath.airyai(t - z) ** 2, [0, z, z + 30])
        assert airy_state(2).norm == pytest.approx(math.sqrt(float(ref)), rel=1e-10)

    def test_profile_normalisation_and_orthogonality(self):
        t = np.linspace(0, 30, 6001)
        a1 = airy_state_profile(1, t)
        a2 = airy_state_profile(2, t)
        assert integrate.simpson(a1 ** 2, x=t) == pytest.approx(1.0, abs=1e-8)
        assert abs(integrate.simpson(a1 * a2, x=t)) <= 1e-8
        assert a1[0] == pytest.approx(0.0, abs=1e-12)

    def test_profile_rejects_short_or_coarse_grid(self):
        with pytest.raises(ParameterError):
            airy_state_profile(1, np.linspace(0, 2.0, 100))
        with pytest.raises(ResolutionError):
            airy_state_profile(10, np.linspace(0, 30, 40))
        with pytest.raises(ParameterError):
            airy_state_profile(1, np.array([0.0, 2.0, 1.0, 5.0]))

    def test_tail_decay(self):
        a = airy_state(1)
        for R in (4.0, 6.0, 8.0):
            mass, _ = integrate.quad(lambda t: float(a(t)) ** 2, R, R + 30)
            assert mass <= 10 * math.exp(-(R - a.z_k) ** 1.5)

    @pytest.mark.parametrize("k", range(1, 11))
    def test_eigen_relation_residual_converges(self, k):
        res = []
        for n in (2000, 4000):
            t = np.linspace(0, 40, n + 1)
            d = t[1] - t[0]
            a = airy_state(k)(t)
            lap = (a[2:] - 2 * a[1:-1] + a[:-2]) / d ** 2
            r = -lap + (t[1:-1] - airy_zero(k)) * a[1:-1]
            res.append(math.sqrt(np.sum(r ** 2) * d))
        assert res[1] < res[0] / 3.5  # second-order: ratio ~4
