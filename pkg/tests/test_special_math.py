"""Closed forms, identities and singular quadrature.

Frozen reference values were computed independently with mpmath at 25-30
significant digits.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hermitelab.moving_average import parse_kernel
from hermitelab.special_math import (
    QuadratureError,
    beta_convolution_identity,
    beta_convolution_numeric,
    derive_params,
    exp_kernel_double_integral,
    hermite_scale_c,
    limit_constant_b,
    limit_prefactor,
    limit_scale,
    singular_double_integral,
    singular_rectangle_integral,
    tempered_power_extrapolated,
    tempered_power_integral,
    tempered_power_numeric,
)

# mpmath oracles
C_07_2 = 0.0680247640952874734373528405579
C_075_1 = 0.267411158757997581025176832515
C_09_3 = 0.00516184293035999899952981601922
B_07_2_EXP = 0.9713756647099577
B_09_3_EXP2 = 0.340571725810718826593290789474
APPENDIX_075 = complex(3.34962678707634593233441088872, -1.38746084409523798416814040019)
BETA_2_05_07 = 4.60415398968866348507212343579
POWER_25_DOUBLE = 0.55119050539420811902  # power rho=2.5, cut=1, alpha=-0.3


class TestDeriveParams:
    def test_known_values(self):
        p = derive_params(2, 0.7)
        assert p.H0 == pytest.approx(0.85, abs=1e-15)
        assert p.Hprime == pytest.approx(0.7, abs=1e-15)

    def test_q1_reduces(self):
        p = derive_params(1, 0.8)
        assert p.H0 == 0.8
        assert p.Hprime == pytest.approx(0.6)

    @given(st.integers(1, 8), st.floats(0.51, 0.99))
    def test_hprime_is_2h0_minus_1(self, q, H):
        p = derive_params(q, H)
        assert p.Hprime == 2.0 * p.H0 - 1.0
        assert p.H0 == pytest.approx(1 + (H - 1) / q, abs=1e-15)
        assert p.Hprime == pytest.approx(1 + (2 * H - 2) / q, abs=1e-14)

    @pytest.mark.parametrize("q,H", [(0, 0.7), (-1, 0.7), (1.5, 0.7), (2, 0.0), (2, 1.0), (2, 1.3)])
    def test_rejects_bad_input(self, q, H):
        with pytest.raises(ValueError):
            derive_params(q, H)

    def test_nclt_regime(self):
        assert derive_params(2, 0.6).nclt
        assert derive_params(1, 0.8).nclt
        assert not derive_params(1, 0.7).nclt
        assert not derive_params(3, 0.4).nclt


class TestHermiteScale:
    @pytest.mark.parametrize("q,H,expected", [(2, 0.7, C_07_2), (1, 0.75, C_075_1), (3, 0.9, C_09_3)])
    def test_against_mpmath(self, q, H, expected):
        assert hermite_scale_c(derive_params(q, H)) == pytest.approx(expected, rel=1e-13)

    def test_rejects_low_H(self):
        with pytest.raises(ValueError):
            hermite_scale_c(derive_params(2, 0.4))


class TestLimitConstant:
    def test_q2_exp(self, exp_kernel):
        assert limit_constant_b(derive_params(2, 0.7), exp_kernel) == pytest.approx(B_07_2_EXP, rel=1e-9)

    def test_q3_exp_theta2(self):
        b = limit_constant_b(derive_params(3, 0.9), parse_kernel("exp:theta=2"))
        assert b == pytest.approx(B_09_3_EXP2, rel=1e-8)

    def test_q1_reduces_to_squared_integral(self):
        p = derive_params(1, 0.8)
        x = parse_kernel("exp:theta=0.5")
        assert limit_constant_b(p, x) == limit_prefactor(p) * 4.0

    def test_q1_value(self, exp_kernel):
        assert limit_constant_b(derive_params(1, 0.8), exp_kernel) == pytest.approx(1.9595917942265424, rel=1e-14)

    def test_corrected_scale_is_q_times_b(self, exp_kernel):
        p = derive_params(2, 0.7)
        assert limit_scale(p, exp_kernel, "corrected") == pytest.approx(2 * B_07_2_EXP, rel=1e-9)
        assert limit_scale(p, exp_kernel, "paper") == pytest.approx(B_07_2_EXP, rel=1e-9)
        with pytest.raises(ValueError):
            limit_scale(p, exp_kernel, "other")

    def test_inadmissible_kernel_raises(self):
        with pytest.raises(ValueError, match="not integrable"):
            limit_constant_b(derive_params(2, 0.7), parse_kernel("power:rho=1,cut=1"))

    def test_clt_regime_raises(self, exp_kernel):
        with pytest.raises(ValueError, match="CLT"):
            limit_constant_b(derive_params(1, 0.7), exp_kernel)

    def test_zero_kernel(self):
        x = parse_kernel("exp:theta=1,amp=0")
        assert limit_constant_b(derive_params(2, 0.7), x) == 0.0


class TestBetaIdentity:
    def test_against_mpmath(self):
        assert beta_convolution_identity(2.0, 0.5, 0.7) == pytest.approx(BETA_2_05_07, rel=1e-13)
        assert beta_convolution_numeric(2.0, 0.5, 0.7) == pytest.approx(BETA_2_05_07, rel=1e-10)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.0, 5.0), st.floats(0.0, 5.0), st.floats(0.55, 0.95))
    def test_numeric_matches_closed_form(self, z1, z2, H0):
        if abs(z1 - z2) < 1e-3:
            return
        exact = beta_convolution_identity(z1, z2, H0)
        assert beta_convolution_numeric(z1, z2, H0) == pytest.approx(exact, rel=1e-9)

    def test_diagonal_raises(self):
        with pytest.raises(ZeroDivisionError):
            beta_convolution_identity(1.0, 1.0, 0.7)
        with pytest.raises(ZeroDivisionError):
            beta_convolution_numeric(1.0, 1.0, 0.7)

    @pytest.mark.parametrize("H0", [0.5, 1.0, 0.3])
    def test_rejects_h0(self, H0):
        with pytest.raises(ValueError):
            beta_convolution_identity(1.0, 2.0, H0)


class TestTemperedPower:
    def test_closed_form(self):
        assert tempered_power_integral(0.75) == pytest.approx(APPENDIX_075, rel=1e-14)

    def test_extrapolated(self):
        v = tempered_power_extrapolated(0.75)
        assert abs(v - APPENDIX_075) / abs(APPENDIX_075) < 1e-7

    def test_eps_zero_direct(self):
        v = tempered_power_numeric(0.75, 0.0)
        assert abs(v - APPENDIX_075) / abs(APPENDIX_075) < 1e-7

    def test_tempering_shrinks_modulus(self):
        assert abs(tempered_power_numeric(0.7, 0.5)) < abs(tempered_power_integral(0.7))

    def test_negative_eps(self):
        with pytest.raises(ValueError):
            tempered_power_numeric(0.7, -1.0)


class TestSingularQuadrature:
    @pytest.mark.parametrize("theta,alpha", [(1.0, -0.3), (0.5, -0.6), (2.0, -0.1), (1.0, 0.0)])
    def test_exp_closed_form(self, theta, alpha):
        x = parse_kernel(f"exp:theta={theta}")
        res = singular_double_integral(x, alpha)
        assert res.value == pytest.approx(exp_kernel_double_integral(theta, alpha), rel=1e-8)

    def test_box_closed_form(self):
        x = parse_kernel("box:T0=1")
        assert singular_double_integral(x, -0.5).value == pytest.approx(8.0 / 3.0, rel=1e-9)
        assert x.double_integral(-0.5) == pytest.approx(8.0 / 3.0, rel=1e-14)

    @pytest.mark.slow
    def test_power_kernel_against_mpmath(self):
        res = singular_double_integral(parse_kernel("power:rho=2.5,cut=1"), -0.3)
        assert res.value == pytest.approx(POWER_25_DOUBLE, rel=1e-7)

    def test_non_integrable_raises(self):
        with pytest.raises(QuadratureError):
            singular_double_integral(parse_kernel("power:rho=0.8,cut=1"), -0.3)

    def test_alpha_range(self, exp_kernel):
        with pytest.raises(ValueError):
            singular_double_integral(exp_kernel, -1.0)
        with pytest.raises(ValueError):
            singular_double_integral(exp_kernel, 0.2)

    def test_rectangle_symmetric_in_arguments(self):
        f = lambda a: math.exp(-a)  # noqa: E731
        g = lambda b: 1.0 + b  # noqa: E731
        v1, _ = singular_rectangle_integral(f, g, 2.0, 1.0, -0.4)
        v2, _ = singular_rectangle_integral(g, f, 1.0, 2.0, -0.4)
        assert v1 == pytest.approx(v2, rel=1e-10)

    def test_rectangle_alpha_zero_is_product(self):
        v, _ = singular_rectangle_integral(lambda a: a, lambda b: 1.0, 2.0, 3.0, 0.0)
        assert v == pytest.approx(2.0 * 3.0, rel=1e-12)

    def test_empty_box(self):
        assert singular_rectangle_integral(np.exp, np.exp, 0.0, 1.0, -0.3) == (0.0, 0.0)
