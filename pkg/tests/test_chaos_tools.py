import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import hermite_e

from hermitelab.chaos_tools import (
    ChaosKernel,
    RosenblattSpec,
    chaos2_cumulant,
    chaos2_sample,
    contract,
    inner,
    multiple_integral,
    product_formula_check,
    rosenblatt_kernel,
    rosenblatt_min_cells,
    rosenblatt_variance_extrapolated,
    symmetrize,
)
from hermitelab.mc_engine import sample_cumulants

# mpmath: kappa_3(R(1)) = 48 ((Hr/2)(2Hr-1))^(3/2) B(3Hr-1, 2) B(Hr, Hr)
ROSENBLATT_K3 = {0.6: 1.183272172558562744026967, 0.7: 2.067068890849546172879234,
                 0.85: 2.6840828055373505561167}
A1_07 = 0.0680247640952874742287572751596
A2_07 = 0.0701865856127358502213843170414


def unit(d, i):
    e = np.zeros(d)
    e[i] = 1.0
    return e


def he(q, x):
    coef = np.zeros(q + 1)
    coef[q] = 1.0
    return hermite_e.hermeval(x, coef)


class TestKernel:
    def test_validation(self):
        with pytest.raises(ValueError):
            ChaosKernel(np.zeros((3, 4)))
        with pytest.raises(ValueError):
            ChaosKernel(np.array([np.nan, 1.0]))
        with pytest.raises(ValueError):
            ChaosKernel(np.array(1.0))

    def test_symmetrize_is_projection(self, rng):
        f = ChaosKernel(rng.normal(size=(4, 4, 4)))
        s = symmetrize(f)
        assert s.is_symmetric()
        np.testing.assert_allclose(symmetrize(s).entries, s.entries, atol=1e-15)
        assert s.norm() <= f.norm() + 1e-12

    def test_eigenvalues_need_symmetry(self, rng):
        with pytest.raises(np.linalg.LinAlgError):
            ChaosKernel(rng.normal(size=(3, 3))).eigenvalues
        with pytest.raises(ValueError):
            ChaosKernel(np.zeros((2, 2, 2))).eigenvalues


class TestContraction:
    def test_r0_is_tensor_product(self, rng):
        f, g = ChaosKernel(rng.normal(size=3)), ChaosKernel(rng.normal(size=3))
        np.testing.assert_allclose(contract(f, g, 0).entries, np.outer(f.entries, g.entries))

    def test_full_is_inner(self, rng):
        f, g = ChaosKernel(rng.normal(size=(3, 3))), ChaosKernel(rng.normal(size=(3, 3)))
        assert inner(f, g) == pytest.approx(float(np.sum(f.entries * g.entries)))

    def test_bad_index(self, rng):
        f = ChaosKernel(rng.normal(size=3))
        with pytest.raises(ValueError):
            contract(f, f, 2)
        with pytest.raises(ValueError):
            contract(f, ChaosKernel(rng.normal(size=4)), 0)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 3), st.integers(1, 3), st.integers(2, 5), st.integers(0, 2**32 - 1))
    def test_norm_inequality(self, p, q, d, seed):
        r_ = np.random.default_rng(seed)
        f = ChaosKernel(r_.normal(size=(d,) * p))
        g = ChaosKernel(r_.normal(size=(d,) * q))
        for r in range(min(p, q) + 1):
            c = contract(f, g, r)
            n = abs(c) if isinstance(c, float) else c.norm()
            assert n <= f.norm() * g.norm() * (1 + 1e-12)


class TestMultipleIntegral:
    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    def test_hermite_of_unit_vector(self, m, rng):
        d = 3
        e = unit(d, 1)
        f = e
        for _ in range(m - 1):
            f = np.multiply.outer(f, e)
        G = rng.normal(size=(d, 50))
        np.testing.assert_allclose(multiple_integral(ChaosKernel(f), G), he(m, G[1]), rtol=1e-12, atol=1e-12)

    def test_order2_quadratic_form(self, rng):
        A = rng.normal(size=(5, 5))
        A = A + A.T
        G = rng.normal(size=5)
        assert multiple_integral(ChaosKernel(A), G) == pytest.approx(G @ A @ G - np.trace(A), rel=1e-12)

    def test_uses_symmetrization(self, rng):
        A = rng.normal(size=(4, 4))
        G = rng.normal(size=(4, 10))
        np.testing.assert_allclose(multiple_integral(ChaosKernel(A), G),
                                   multiple_integral(ChaosKernel(0.5 * (A + A.T)), G), atol=1e-12)

    def test_isometry(self, rng):
        f = symmetrize(ChaosKernel(rng.normal(size=(3, 3, 3))))
        G = rng.normal(size=(3, 200_000))
        I = multiple_integral(f, G)
        assert abs(I.mean()) < 4 * I.std() / math.sqrt(I.size)
        assert I.var() == pytest.approx(6 * f.norm() ** 2, rel=0.03)

    def test_order_limit(self):
        with pytest.raises(ValueError):
            multiple_integral(ChaosKernel(np.zeros((2,) * 5)), np.zeros(2))

    def test_product_formula(self, rng):
        f, g = ChaosKernel(rng.normal(size=40)), ChaosKernel(rng.normal(size=40))
        rep = product_formula_check(f, g, rng, paths=2000)
        assert rep.max_residual <= 1e-10
        assert abs(rep.mean_product - rep.inner) < 4 * rep.se_product
        assert abs(rep.mean_i2) < 4 * rep.se_i2


class TestSecondChaos:
    def test_kappa2_eigen_and_norm_agree(self, rng):
        A = rng.normal(size=(6, 6))
        f = ChaosKernel(0.5 * (A + A.T))
        assert chaos2_cumulant(f, 2) == pytest.approx(2 * np.sum(f.eigenvalues**2), rel=1e-12)

    def test_cumulants_of_chi_square(self):
        # lambda = 1 on one axis: I_2 = xi^2 - 1, kappa_m = 2^(m-1) (m-1)!
        f = ChaosKernel(np.diag([1.0, 0.0]))
        for m in range(2, 7):
            assert chaos2_cumulant(f, m) == pytest.approx(2 ** (m - 1) * math.factorial(m - 1))

    def test_cumulant_order_range(self):
        f = ChaosKernel(np.eye(2))
        for m in (1, 7):
            with pytest.raises(ValueError):
                chaos2_cumulant(f, m)

    def test_sample_matches_trace_oracle(self):
        rng = np.random.default_rng(77)
        A = rng.normal(size=(8, 8))
        f = ChaosKernel(0.1 * (A + A.T))
        s = chaos2_sample(f, 40_000, rng)
        for m in (2, 3):
            est, se = sample_cumulants(s, m)
            assert abs(est - chaos2_cumulant(f, m)) < 4 * se

    def test_sample_agrees_with_wick_integral(self):
        f = ChaosKernel(np.diag([0.5, -0.25, 0.1]))
        G = np.random.default_rng(3).normal(size=(3, 7))
        direct = multiple_integral(f, G)
        lam = f.eigenvalues
        order = np.argsort(np.diag(f.entries))
        np.testing.assert_allclose(direct, (G[order] ** 2 - 1).T @ lam, atol=1e-14)


class TestRosenblatt:
    def test_constants(self):
        s = RosenblattSpec(0.7)
        assert s.A1 == pytest.approx(A1_07, rel=1e-13)
        assert s.A1_from_D == pytest.approx(A1_07, rel=1e-13)
        assert s.A2 == pytest.approx(A2_07, rel=1e-13)
        assert s.A2_from_D == pytest.approx(A2_07, rel=1e-13)

    @pytest.mark.parametrize("Hr", [0.5, 1.0])
    def test_range(self, Hr):
        with pytest.raises(ValueError):
            RosenblattSpec(Hr)

    def test_kernel_self_similar(self):
        s = RosenblattSpec(0.7)
        k1 = chaos2_cumulant(rosenblatt_kernel(s, 1.0, 512), 2)
        k2 = chaos2_cumulant(rosenblatt_kernel(s, 2.0, 512), 2)
        assert k2 == pytest.approx(2**1.4 * k1, rel=1e-10)

    def test_variance_from_below_and_converging(self):
        s = RosenblattSpec(0.7)
        v = [chaos2_cumulant(rosenblatt_kernel(s, 1.0, n), 2) for n in (512, 1024, 2048)]
        assert v[0] < v[1] < v[2] < 1.0

    @pytest.mark.slow
    def test_extrapolated_variance(self):
        assert rosenblatt_variance_extrapolated(RosenblattSpec(0.7), n=2048) == pytest.approx(1.0, abs=0.01)

    @pytest.mark.parametrize("Hr", sorted(ROSENBLATT_K3))
    def test_third_cumulant_closed_form(self, Hr):
        K = rosenblatt_kernel(RosenblattSpec(Hr), 1.0, 1024)
        assert chaos2_cumulant(K, 3) == pytest.approx(ROSENBLATT_K3[Hr], rel=3e-3)

    def test_min_cells(self):
        s = RosenblattSpec(0.7)
        n = rosenblatt_min_cells(s)
        rosenblatt_kernel(s, 1.0, n)
        with pytest.raises(ValueError):
            rosenblatt_kernel(s, 1.0, n - 1)
        assert rosenblatt_min_cells(RosenblattSpec(0.9)) > n
        assert rosenblatt_min_cells(RosenblattSpec(0.995)) is None

    def test_grid_limit(self):
        with pytest.raises(ValueError):
            rosenblatt_kernel(RosenblattSpec(0.7), 1.0, 8192)
        with pytest.raises(ValueError):
            rosenblatt_kernel(RosenblattSpec(0.7), 0.0, 64)
