import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from seqvar import model as M
from seqvar.errors import DomainError, UnavailableStatisticError, UsageError
from seqvar.priors import Hyperprior, MeanPrior


def params(n=10, alpha=0.5, s0=1.0, mu=0.0):
    return M.ModelParams.constant_mean(alpha, n, s0, mu)


class TestParams:
    @given(st.integers(2, 5000), st.floats(0.0, 1.0))
    def test_split(self, n, alpha):
        n1, n2 = M.split_sizes(n, alpha)
        assert n1 == math.floor(n * alpha) and n1 + n2 == n

    def test_mu_length_checked(self):
        with pytest.raises(DomainError):
            M.ModelParams(0.5, 10, 1.0, np.zeros(4))

    @pytest.mark.parametrize("kw", [dict(n=1), dict(alpha=1.5), dict(s0=0.0)])
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            params(**kw)

    def test_mu_bar_sq(self):
        p = M.ModelParams(0.5, 6, 1.0, np.array([1.0, 2.0, 3.0]))
        assert p.mu_bar_sq == pytest.approx(14.0 / 3.0)


class TestGenerate:
    def test_sizes(self):
        d = M.generate_dataset(params(10), seed=1)
        assert d.y.size == 5 and d.z.size == 5

    def test_deterministic(self):
        a = M.generate_dataset(params(50, mu=0.3), 7, 3)
        b = M.generate_dataset(params(50, mu=0.3), 7, 3)
        assert np.array_equal(a.y, b.y) and np.array_equal(a.z, b.z)

    def test_replications_differ(self):
        a = M.generate_dataset(params(50), 7, 0)
        b = M.generate_dataset(params(50), 7, 1)
        assert not np.array_equal(a.y, b.y)

    def test_noise_independent_of_means(self):
        a = M.generate_dataset(params(40, mu=0.0), 11, 2)
        b = M.generate_dataset(params(40, mu=5.0), 11, 2)
        assert np.array_equal(a.y, b.y)
        assert np.array_equal(b.z - a.z, np.full(20, 5.0))

    def test_alpha_one_is_plain_model(self):
        d = M.generate_dataset(params(12, alpha=1.0), 3)
        assert d.y.size == 12 and d.z.size == 0

    @pytest.mark.slow
    def test_z_mean_monte_carlo(self):
        mu = np.array([0.7, -1.3])
        p = M.ModelParams(0.5, 4, 2.0, mu)
        reps = 100_000
        zs = np.array([M.generate_dataset(p, 99, r).z for r in range(reps)])
        tol = 3.0 * math.sqrt(2.0) / math.sqrt(reps)
        assert np.all(np.abs(zs.mean(axis=0) - mu) <= tol)

    def test_point_mass_prior_matches_constant_means(self):
        d1 = M.generate_random_means_dataset(MeanPrior.point_mass(1.5), 1.0, 30, 0.5, seed=5, replication=2)
        d2 = M.generate_dataset(params(30, mu=1.5), 5, 2)
        assert np.array_equal(d1.y, d2.y) and np.array_equal(d1.z, d2.z)

    def test_gaussian_prior_variance(self):
        theta_sq, s0, n = 2.0, 1.0, 200_000
        d = M.generate_random_means_dataset(MeanPrior.gaussian(theta_sq), s0, n, 0.5, seed=13)
        var = d.z.var(ddof=1)
        # sd of a sample variance of normal data: v * sqrt(2 / (m - 1))
        se = (theta_sq + s0) * math.sqrt(2.0 / (d.z.size - 1))
        assert abs(var - (theta_sq + s0)) <= 3.0 * se

    def test_hyperprior_mode(self):
        d, mu = M.generate_random_means_dataset(Hyperprior.exponential(1.0), 1.0, 40, 0.5, seed=4,
                                                return_means=True)
        assert mu.size == 20 and d.z.size == 20
        d2 = M.generate_random_means_dataset(Hyperprior.exponential(1.0), 1.0, 40, 0.5, seed=4)
        assert np.array_equal(d.z, d2.z)

    def test_improper_rejected(self):
        with pytest.raises(UsageError):
            M.generate_random_means_dataset(MeanPrior.uniform_improper(), 1.0, 10, 0.5, seed=1)

    def test_negative_seed(self):
        with pytest.raises(DomainError):
            M.substream(-1, 0)


class TestSuffStats:
    def test_arithmetic(self):
        s = M.suff_stats(M.Dataset(np.array([1.0, 1.0]), np.array([2.0, 2.0])))
        assert (s.y_bar_sq, s.z_bar_sq, s.x_bar_sq) == (1.0, 4.0, 2.5)

    def test_zero_block(self):
        s = M.suff_stats(M.Dataset(np.zeros(3), np.ones(2)))
        assert s.y_bar_sq == 0.0

    def test_missing_block(self):
        s = M.suff_stats(M.Dataset(np.array([]), np.array([1.0, 2.0])))
        with pytest.raises(UnavailableStatisticError):
            s.y_bar_sq
        assert not s.complete
        s2 = M.suff_stats(M.Dataset(np.array([1.0]), np.array([])))
        with pytest.raises(UnavailableStatisticError):
            s2.z_bar_sq

    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30),
           st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30), st.randoms())
    def test_permutation_and_identity(self, y, z, rnd):
        y, z = np.array(y), np.array(z)
        s = M.suff_stats(M.Dataset(y, z))
        yp, zp = list(y), list(z)
        rnd.shuffle(yp)
        rnd.shuffle(zp)
        assert M.suff_stats(M.Dataset(np.array(yp), np.array(zp))) == s
        lhs = s.x_bar_sq * s.n
        rhs = s.n1 * s.y_bar_sq + s.n2 * s.z_bar_sq
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)
        assert s.y_bar_sq >= 0 and s.z_bar_sq >= 0


def test_csv_roundtrip(tmp_path):
    d = M.generate_dataset(params(9, alpha=0.34, mu=0.1), 21)
    path = tmp_path / "d.csv"
    M.write_dataset_csv(d, path)
    assert path.read_text().splitlines()[0] == "block,index,value"
    back = M.read_dataset_csv(path)
    assert np.array_equal(back.y, d.y) and np.array_equal(back.z, d.z)
