import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from seqvar import priors as P
from seqvar.errors import DomainError, UsageError

PROPER_MEAN = [P.MeanPrior.gaussian(1.3), P.MeanPrior.cauchy(0.7), P.MeanPrior.laplace(2.0)]


class TestMeanPrior:
    def test_values(self):
        assert P.mean_prior_logpdf(P.MeanPrior.gaussian(1.0), 0.0) == pytest.approx(-0.9189385332046727, rel=1e-15)
        assert P.mean_prior_logpdf(P.MeanPrior.cauchy(1.0), 0.0) == pytest.approx(-math.log(math.pi), rel=1e-15)
        lap = P.MeanPrior.laplace(1.0)
        assert P.mean_prior_logpdf(lap, 2.0) == P.mean_prior_logpdf(lap, -2.0)

    def test_improper_zero(self):
        assert P.mean_prior_logpdf(P.MeanPrior.uniform_improper(), 123.0) == 0.0

    @pytest.mark.parametrize("nu", PROPER_MEAN, ids=lambda p: p.family)
    def test_integrates_to_one(self, nu):
        f = lambda m: math.exp(P.mean_prior_logpdf(nu, m))
        total = integrate.quad(f, -np.inf, 0, epsrel=1e-12)[0] + integrate.quad(f, 0, np.inf, epsrel=1e-12)[0]
        assert total == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("nu", PROPER_MEAN, ids=lambda p: p.family)
    @given(mu=st.floats(-1e6, 1e6))
    def test_symmetric(self, nu, mu):
        assert P.mean_prior_logpdf(nu, mu) == P.mean_prior_logpdf(nu, -mu)

    def test_non_finite(self):
        with pytest.raises(DomainError):
            P.mean_prior_logpdf(P.MeanPrior.cauchy(), math.inf)

    def test_bad_params(self):
        with pytest.raises(DomainError):
            P.MeanPrior.gaussian(-1.0)
        with pytest.raises(UsageError):
            P.MeanPrior("student", (3.0,))
        with pytest.raises(UsageError):
            P.MeanPrior("cauchy", ())

    def test_sampling(self, rng):
        with pytest.raises(UsageError):
            P.MeanPrior.uniform_improper().sample(3, rng)
        assert np.all(P.MeanPrior.point_mass(2.0).sample(4, rng) == 2.0)


class TestTailRatio:
    def test_cauchy_unit(self):
        assert P.tail_ratio_Q(P.MeanPrior.cauchy(1.0), 1.0) == pytest.approx(1.0, rel=1e-14)

    def test_gaussian_196(self):
        # Phi oracle at 40 digits
        assert P.tail_ratio_Q(P.MeanPrior.gaussian(1.0), 1.96) == pytest.approx(0.052626914476559673873, rel=1e-12)

    def test_cauchy_five(self):
        # 2 atan(1/5) / (2 atan(5)), arctan arithmetic
        want = math.atan(0.2) / math.atan(5.0)
        assert P.tail_ratio_Q(P.MeanPrior.cauchy(1.0), 5.0) == pytest.approx(want, rel=1e-14)
        assert want == pytest.approx(0.14372757362657, rel=1e-12)

    @pytest.mark.parametrize("nu", PROPER_MEAN, ids=lambda p: p.family)
    def test_monotone_and_vanishing(self, nu):
        u = np.geomspace(1e-3, 1e6, 200) * nu.scale
        q = np.array([P.tail_ratio_Q(nu, x) for x in u])
        assert np.all(np.diff(q) <= 0)
        assert P.tail_ratio_Q(nu, 1e6 * nu.scale) < 1e-4

    def test_errors(self):
        with pytest.raises(UsageError):
            P.tail_ratio_Q(P.MeanPrior.uniform_improper(), 1.0)
        with pytest.raises(DomainError):
            P.tail_ratio_Q(P.MeanPrior.cauchy(), 0.0)


POSITIVE = [P.VariancePrior.inverse_gamma(3.0, 2.0), P.VariancePrior.log_normal(0.0, 1.0),
            P.VariancePrior.log_normal(1.0, 0.3), P.VariancePrior.exponential(1.5)]


class TestPositive:
    def test_values(self):
        assert P.variance_prior_logpdf(P.VariancePrior.inverse_gamma(1.0, 1.0), 1.0) == pytest.approx(-1.0)
        assert P.variance_prior_logpdf(P.VariancePrior.improper_flat(), 3.7) == 0.0

    @pytest.mark.parametrize("pi", POSITIVE, ids=lambda p: f"{p.family}{p.params}")
    def test_integrates_to_one(self, pi):
        f = lambda x: math.exp(pi.logpdf(x))
        pts = [0, 1e-3, 0.1, 1, 10, 100]
        total = sum(integrate.quad(f, a, b, epsabs=0, epsrel=1e-12, limit=200)[0] for a, b in zip(pts, pts[1:]))
        total += integrate.quad(f, 100, np.inf, epsrel=1e-12)[0]
        assert total == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("pi", POSITIVE, ids=lambda p: f"{p.family}{p.params}")
    def test_sup_beyond(self, pi):
        for t in (0.05, 0.5, 3.0, 40.0):
            grid = np.linspace(t, t + 200.0, 20001)
            assert pi.log_sup_beyond(t) >= np.max(pi.logpdf(grid)) - 1e-12

    def test_domain(self):
        with pytest.raises(DomainError):
            P.variance_prior_logpdf(P.VariancePrior.exponential(1.0), 0.0)
        with pytest.raises(DomainError):
            P.VariancePrior.inverse_gamma(0.0, 1.0)

    def test_point_mass_only_for_hyperprior(self):
        with pytest.raises(UsageError):
            P.VariancePrior("point_mass", (1.0,))
        h = P.Hyperprior.point_mass(2.0)
        assert h.mode() == 2.0
        with pytest.raises(UsageError):
            h.logpdf(2.0)

    def test_hyperprior_logpdf(self):
        g = P.Hyperprior.inverse_gamma(2.0, 1.0)
        assert P.hyperprior_logpdf(g, 0.5) == pytest.approx(2 * math.log(1.0) - 0.0 - 3 * math.log(0.5) - 2.0)

    def test_sample_means(self, rng):
        x = P.Hyperprior.inverse_gamma(5.0, 8.0).sample(200_000, rng)
        assert x.mean() == pytest.approx(2.0, rel=0.01)
