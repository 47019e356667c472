import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hermitelab.gaussian_noise import FgnSampler, FgnSpec, fgn_autocovariance, sample_fgn

# mpmath, H = 0.85
R_085 = {1: 0.624504792712471045219418765551, 2: 0.487494334536947558893585842869,
         8: 0.319015166625501514827434861581, 64: 0.170870236160704983388671733813}


def implied_covariance(sampler: FgnSampler, lags: np.ndarray) -> np.ndarray:
    """Covariance of the real part of one draw, read off the embedding amplitudes."""
    a2 = sampler._amp ** 2
    m = sampler.size
    phase = 2.0 * np.pi * np.outer(lags, np.arange(m)) / m
    return np.cos(phase) @ a2


class TestAutocovariance:
    @pytest.mark.parametrize("k", sorted(R_085))
    def test_against_mpmath(self, k):
        assert fgn_autocovariance(k, 0.85) == pytest.approx(R_085[k], rel=1e-14)

    def test_lag_zero_is_one(self):
        assert fgn_autocovariance(0, 0.7) == 1.0

    def test_symmetric(self):
        k = np.arange(-20, 21)
        r = fgn_autocovariance(k, 0.65)
        np.testing.assert_array_equal(r, r[::-1])

    def test_half_is_white(self):
        np.testing.assert_allclose(fgn_autocovariance(np.arange(1, 6), 0.5), 0.0, atol=1e-15)

    def test_fbm_variance_from_partial_sums(self):
        # Var(sum_{i<n} xi_i) = n^(2H)
        H, n = 0.8, 50
        k = np.arange(n)
        r = fgn_autocovariance(k[:, None] - k[None, :], H)
        assert r.sum() == pytest.approx(n ** (2 * H), rel=1e-12)


class TestSpec:
    @pytest.mark.parametrize("kw", [dict(hurst=0.85, n=1), dict(hurst=0.5, n=10),
                                    dict(hurst=1.0, n=10), dict(hurst=0.7, n=10, delta=0.0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            FgnSpec(**kw)

    def test_increment_scale(self):
        assert FgnSpec(0.7, 10, delta=0.25).increment_scale == pytest.approx(0.25**0.7)


class TestEmbedding:
    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.51, 0.99), st.integers(2, 600))
    def test_embedding_is_exact(self, H, n):
        s = FgnSampler(FgnSpec(H, n))
        lags = np.arange(n)
        np.testing.assert_allclose(implied_covariance(s, lags), fgn_autocovariance(lags, H),
                                   rtol=0, atol=1e-12)
        assert s.clipped_fraction == 0.0
        assert s.size >= 2 * (n - 1)

    def test_two_by_two_matches_cholesky(self):
        H = 0.85
        s = FgnSampler(FgnSpec(H, 2))
        C = np.array([[1.0, R_085[1]], [R_085[1], 1.0]])
        L = np.linalg.cholesky(C)
        implied = implied_covariance(s, np.arange(2))
        np.testing.assert_allclose(implied, (L @ L.T)[0], atol=1e-14)

    def test_pair_components_uncorrelated(self):
        s = FgnSampler(FgnSpec(0.8, 64))
        a2 = s._amp ** 2
        m = s.size
        phase = 2.0 * np.pi * np.outer(np.arange(-63, 64), np.arange(m)) / m
        np.testing.assert_allclose(np.sin(phase) @ a2, 0.0, atol=1e-12)


class TestSampling:
    def test_shapes(self, rng):
        s = FgnSampler(FgnSpec(0.7, 100))
        a, b = s.draw_pair(rng)
        assert a.shape == b.shape == (100,)
        assert s.draw_many(rng, 5).shape == (5, 100)
        assert sample_fgn(FgnSpec(0.7, 33), rng).shape == (33,)

    def test_deterministic(self):
        s = FgnSampler(FgnSpec(0.7, 128))
        a = s.draw_many(np.random.default_rng(1), 3)
        b = s.draw_many(np.random.default_rng(1), 3)
        np.testing.assert_array_equal(a, b)

    def test_empirical_covariance(self):
        H, n, count = 0.75, 16, 40_000
        X = FgnSampler(FgnSpec(H, n)).draw_many(np.random.default_rng(5), count)
        emp = X.T @ X / count
        k = np.arange(n)
        exact = fgn_autocovariance(k[:, None] - k[None, :], H)
        # entrywise SE of a product moment is at most sqrt(2 / count)
        assert np.max(np.abs(emp - exact)) < 5 * np.sqrt(2.0 / count)

    def test_pair_independent(self):
        s = FgnSampler(FgnSpec(0.9, 8))
        draws = [s.draw_pair(np.random.default_rng(i)) for i in range(4000)]
        a = np.array([d[0][0] for d in draws])
        b = np.array([d[1][3] for d in draws])
        assert abs(np.corrcoef(a, b)[0, 1]) < 4 / np.sqrt(4000)
