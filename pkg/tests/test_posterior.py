import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, optimize, special

from seqvar import posterior as P
from seqvar.errors import DegenerateDensityError, DomainError, UsageError
from seqvar.model import Dataset, ModelParams, SuffStats, generate_dataset, suff_stats
from seqvar.priors import Hyperprior, MeanPrior, VariancePrior

HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


@pytest.fixture(scope="module")
def data():
    return generate_dataset(ModelParams.constant_mean(0.5, 24, 1.3, 0.9), seed=8)


def _yy_zz(d):
    return float(np.sum(d.y ** 2)), float(np.sum(d.z ** 2))


class TestMarginalLikelihood:
    def test_point_mass(self, data):
        s = np.geomspace(0.1, 10, 30)
        yy, zz = _yy_zz(data)
        got = P.log_marginal_lik_iid(s, data, MeanPrior.point_mass(0.0))
        full = -(data.n / 2) * np.log(2 * np.pi * s) - (yy + zz) / (2 * s)
        # the package drops the sigma-free -(n/2) log(2 pi)
        np.testing.assert_allclose(got - data.n * HALF_LOG_2PI, full, rtol=1e-13)

    def test_gaussian_matches_closed_form(self, data):
        s = np.geomspace(0.05, 20, 100)
        got = P.log_marginal_lik_iid(s, data, MeanPrior.gaussian(0.7))
        want = P.log_posterior_gaussian_prior(s, suff_stats(data), 0.7)
        assert np.max(np.abs(got - want)) <= 1e-8

    def test_improper(self, data):
        s = np.geomspace(0.05, 20, 50)
        yy, _ = _yy_zz(data)
        got = P.log_marginal_lik_iid(s, data, MeanPrior.uniform_improper())
        want = -0.5 * data.y.size * np.log(s) - yy / (2 * s)
        diff = got - want
        np.testing.assert_allclose(diff, diff[0], atol=1e-10)

    @pytest.mark.parametrize("s2,want", [(0.8, -3.7082559998132853063), (2.5, -4.4929828263270300221)])
    def test_cauchy_oracle(self, s2, want):
        # per-coordinate integrals by mpmath quadrature at 30 digits
        d = Dataset(np.array([0.5, -1.2]), np.array([0.3, 2.0, -0.7]))
        assert P.log_marginal_lik_iid(s2, d, MeanPrior.cauchy(1.0)) == pytest.approx(want, rel=1e-10)

    @given(st.randoms())
    def test_permutation_invariance(self, rnd):
        d = generate_dataset(ModelParams.constant_mean(0.5, 16, 1.0, 1.5), seed=2)
        y, z = list(d.y), list(d.z)
        rnd.shuffle(y)
        rnd.shuffle(z)
        nu = MeanPrior.cauchy(1.0)
        a = P.log_marginal_lik_iid(1.1, d, nu)
        b = P.log_marginal_lik_iid(1.1, Dataset(np.array(y), np.array(z)), nu)
        assert a == pytest.approx(b, rel=1e-14)

    def test_domain(self, data):
        with pytest.raises(DomainError):
            P.log_marginal_lik_iid(0.0, data, MeanPrior.cauchy())


class TestSpreadAndScore:
    def test_spread_closed_forms(self, data):
        s2, th = 0.9, 1.7
        assert P.nuisance_spread_V(s2, data.z, MeanPrior.uniform_improper()) == data.z.size * s2
        assert P.nuisance_spread_V(s2, data.z, MeanPrior.point_mass(0.0)) == pytest.approx(np.sum(data.z ** 2))
        want = np.sum(data.z ** 2 * s2 ** 2 / (th + s2) ** 2 + s2 * th / (s2 + th))
        assert P.nuisance_spread_V(s2, data.z, MeanPrior.gaussian(th)) == pytest.approx(want, rel=1e-8)

    def test_spread_cauchy_oracle(self):
        # V for one coordinate, mpmath quadrature
        for z, s2, want in [(0.3, 0.5, 0.33706306776642022606), (4.0, 2.0, 3.8746033547882095137),
                            (40.0, 1.0, 1.0037609766894181427)]:
            assert P.nuisance_spread_V(s2, [z], MeanPrior.cauchy(1.0)) == pytest.approx(want, rel=1e-8)

    def test_score_zeros(self, data):
        yy, zz = _yy_zz(data)
        assert P.score(yy / data.y.size, data, MeanPrior.uniform_improper()) == pytest.approx(0.0, abs=1e-12)
        assert P.score((yy + zz) / data.n, data, MeanPrior.point_mass(0.0)) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("nu", [MeanPrior.gaussian(0.6), MeanPrior.cauchy(1.0), MeanPrior.laplace(0.8)],
                             ids=lambda p: p.family)
    @given(s2=st.floats(0.2, 5.0))
    def test_score_finite_difference(self, data, nu, s2):
        h = 1e-5 * s2
        fd = (P.log_marginal_lik_iid(s2 + h, data, nu) - P.log_marginal_lik_iid(s2 - h, data, nu)) / (2 * h)
        sc = P.score(s2, data, nu)
        assert abs(sc - fd) <= 1e-5 * max(abs(sc), data.n / (2 * s2))


STATS = SuffStats(20, 20, 1.1, 1.6)


class TestGaussianPrior:
    def test_theta_zero_is_point_mass(self, data):
        st_ = suff_stats(data)
        pi = VariancePrior.log_normal(0.0, 1.0)
        s = np.geomspace(0.2, 4, 20)
        a = P.log_posterior_gaussian_prior(s, st_, 0.0, pi)
        b = P.log_marginal_lik_iid(s, data, MeanPrior.point_mass(0.0)) + pi.logpdf(s)
        np.testing.assert_allclose(a, b, rtol=1e-13)

    def test_formula(self):
        th = 0.4
        spec = P.GaussPriorSpec(th)
        f = lambda s: (-10 * math.log(s) - 10 * (th + s) - 20 * 1.1 / (2 * s) + 0 * s
                       - 10 * math.log(th + s) + 10 * (th + s) - 20 * 1.6 / (2 * (th + s)))
        d = P.log_posterior_gaussian_prior(2.0, STATS, spec) - P.log_posterior_gaussian_prior(0.5, STATS, spec)
        assert d == pytest.approx(f(2.0) - f(0.5), rel=1e-13)

    @pytest.mark.parametrize("th", [0.2, 0.6, 3.0])
    def test_stationary_point(self, th):
        lp = lambda s: P.log_posterior_gaussian_prior(s, STATS, th)
        dl = lambda s: (lp(s * (1 + 1e-7)) - lp(s * (1 - 1e-7))) / (2e-7 * s)
        s_hat = optimize.brentq(dl, 0.3, 5.0, xtol=1e-14)
        rhs = (20 / 20) * (s_hat / (th + s_hat)) ** 2 * (1.6 - th - s_hat)
        assert s_hat - 1.1 == pytest.approx(rhs, abs=1e-6)

    def test_spec_validation(self):
        with pytest.raises(DomainError):
            P.GaussPriorSpec(0.0)


# log int f_IG(9, 16)(s + t) gamma(t) dt for n2 = 20, Zbar^2 = 1.6; mpmath quadrature
THETA_ORACLE = {
    "exponential": (Hyperprior.exponential(1.0), [-1.2922985353318707071, -0.78909805891160523076,
                                                   -2.9047796373614779575]),
    "inverse_gamma": (Hyperprior.inverse_gamma(2.0, 1.0), [-1.2651704326553207953, -0.63780536113011893183,
                                                          -2.93369180506401101]),
    "log_normal": (Hyperprior.log_normal(0.0, 1.0), [-1.2048753814640072341, -0.9441502495397681457,
                                                    -3.2644797769172767638]),
}


class TestMixture:
    @pytest.mark.parametrize("name", sorted(THETA_ORACLE))
    def test_theta_integral_oracle(self, name):
        g, want = THETA_ORACLE[name]
        got = P.log_theta_integral(np.array([0.5, 1.2, 3.0]), STATS, g)
        np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-10)

    def test_point_mass_hyperprior(self):
        s = np.geomspace(0.2, 5, 25)
        pi = VariancePrior.exponential(1.0)
        a = P.log_posterior_mixture(s, STATS, Hyperprior.point_mass(0.8), pi)
        b = P.log_posterior_gaussian_prior(s, STATS, 0.8, pi)
        diff = a - b
        np.testing.assert_allclose(diff, diff[0], atol=1e-11)

    def test_joint_integrates_to_marginal(self):
        g = Hyperprior.exponential(1.0)
        for s in (0.4, 1.1, 2.7):
            f = lambda t: math.exp(P.log_joint_mixture(s, t, STATS, g))
            val = sum(integrate.quad(f, a, b, epsabs=0, epsrel=1e-13, limit=400)[0]
                      for a, b in [(0, 0.5), (0.5, 2), (2, 10), (10, np.inf)])
            assert P.log_posterior_mixture(s, STATS, g) == pytest.approx(math.log(val), rel=1e-9)

    def test_joint_argmax_flat(self):
        flat = Hyperprior.improper_flat()
        for s in (0.3, 0.9):
            res = optimize.minimize_scalar(lambda t: -P.log_joint_mixture(s, t, STATS, flat),
                                           bounds=(1e-9, 50), method="bounded", options={"xatol": 1e-10})
            assert res.x == pytest.approx(STATS.z_bar_sq - s, abs=1e-6)
        t = np.linspace(STATS.z_bar_sq, 40, 200)
        assert np.all(np.diff(P.log_joint_mixture(0.5, t, STATS, flat)) < 0)

    def test_finite_on_range(self):
        s = np.geomspace(STATS.y_bar_sq / 10, 10 * STATS.z_bar_sq, 400)
        v = P.log_posterior_mixture(s, STATS, Hyperprior.exponential(1.0), VariancePrior.exponential(1.0))
        assert np.all(np.isfinite(v))
        # smooth on a geometric grid: second differences stay small
        assert np.max(np.abs(np.diff(v, 2))) < 0.05

    def test_small_n(self):
        with pytest.raises(UsageError):
            P.log_posterior_mixture(1.0, SuffStats(4, 20, 1.0, 1.0), Hyperprior.exponential(1.0))

    def test_permutation_invariance(self, data):
        st_ = suff_stats(data)
        rev = suff_stats(Dataset(data.y[::-1], data.z[::-1]))
        g = Hyperprior.exponential(1.0)
        assert P.log_posterior_mixture(1.0, st_, g) == P.log_posterior_mixture(1.0, rev, g)


def _gauss_grid(mean=0.0, sd=1.0, half=6.0, m=2001):
    g = np.linspace(mean - half * sd, mean + half * sd, m)
    return P.normalize_on_grid(lambda x: -0.5 * ((x - mean) / sd) ** 2, g)


class TestGrids:
    def test_constant(self):
        pg = P.normalize_on_grid(lambda x: np.zeros_like(x), np.linspace(1, 2, 33))
        inner = pg.weights[1:-1]
        np.testing.assert_allclose(inner, inner[0], rtol=1e-14)
        assert pg.weights.sum() == pytest.approx(1.0, abs=1e-10)

    def test_gaussian_mass(self):
        g = np.linspace(-6, 6, 4001)
        raw = np.exp(-0.5 * g ** 2) / math.sqrt(2 * math.pi)
        trap = np.sum(0.5 * np.diff(g) * (raw[1:] + raw[:-1]))
        assert trap == pytest.approx(1 - 2 * special.ndtr(-6.0), abs=1e-8)
        pg = _gauss_grid(m=4001)
        assert pg.density.max() == pytest.approx(1 / math.sqrt(2 * math.pi) / (1 - 2 * special.ndtr(-6.0)), rel=1e-6)

    def test_shift_invariance(self):
        g = np.linspace(0.1, 3, 50)
        a = P.normalize_on_grid(lambda x: -x ** 2, g)
        b = P.normalize_on_grid(lambda x: -x ** 2 + 700.0, g)
        np.testing.assert_allclose(a.weights, b.weights, rtol=1e-13)

    def test_errors(self):
        with pytest.raises(DegenerateDensityError):
            P.normalize_on_grid(np.full(20, -np.inf), np.arange(1.0, 21.0))
        with pytest.raises(UsageError):
            P.normalize_on_grid(np.zeros(10), np.arange(1.0, 11.0))
        with pytest.raises(UsageError):
            P.normalize_on_grid(np.zeros(20), np.arange(20.0)[::-1])

    def test_neg_inf_points_kept(self):
        g = np.linspace(-1, 1, 40)
        pg = P.normalize_on_grid(np.where(g < 0, -np.inf, 0.0), g)
        assert pg.grid.size == 40 and np.all(pg.weights[g < 0] == 0)

    def test_interval_mass(self):
        pg = _gauss_grid()
        assert P.interval_mass(pg, pg.grid[0], pg.grid[-1]) == pytest.approx(1.0, abs=1e-12)
        assert P.interval_mass(pg, 0.3, 0.3) == 0.0
        assert P.interval_mass(pg, 0.0, pg.grid[-1]) == pytest.approx(0.5, abs=1e-9)
        assert P.interval_mass(pg, -1.0, 1.0) == pytest.approx(special.ndtr(1) - special.ndtr(-1), abs=1e-5)
        with pytest.raises(UsageError):
            P.interval_mass(pg, 1.0, 0.0)

    def test_tv(self):
        a = _gauss_grid(0.0)
        assert P.tv_distance(a, a) == pytest.approx(0.0, abs=1e-14)
        far = P.normalize_on_grid(lambda x: np.zeros_like(x), np.linspace(100, 101, 20))
        assert P.tv_distance(a, far) == pytest.approx(1.0, abs=1e-10)
        g = np.linspace(-10, 11, 20001)
        p0 = P.normalize_on_grid(lambda x: -0.5 * x ** 2, g)
        p1 = P.normalize_on_grid(lambda x: -0.5 * (x - 1) ** 2, g)
        # 2 Phi(1/2) - 1
        assert P.tv_distance(p0, p1) == pytest.approx(0.38292492254802620727, abs=1e-7)

    @given(st.floats(-2, 2), st.floats(0.3, 3))
    def test_tv_bounds_and_symmetry(self, m, sd):
        a = _gauss_grid(0.0, 1.0, m=400)
        b = _gauss_grid(m, sd, m=300)
        t = P.tv_distance(a, b)
        assert 0.0 <= t <= 1.0
        assert t == pytest.approx(P.tv_distance(b, a), abs=1e-12)

    def test_default_grid(self):
        g = P.default_sigma_grid(SuffStats(500, 500, 1.0, 2.0))
        assert g.size >= 4096 and np.all(np.diff(g) > 0)
        assert g[0] == pytest.approx(1.0 / 50) and g[-1] == pytest.approx(100.0)

    def test_csv(self, tmp_path):
        pg = _gauss_grid(m=20)
        path = tmp_path / "g.csv"
        P.write_grid_csv(pg, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "sigma_sq,log_density,weight" and len(lines) == 21
        assert float(lines[3].split(",")[0]) == pg.grid[2]


class TestIidGrid:
    def test_improper_posterior_mode(self):
        d = generate_dataset(ModelParams.constant_mean(0.5, 400, 2.0, 3.0), seed=3)
        pg = P.posterior_grid_iid(d, MeanPrior.uniform_improper())
        yy = float(np.sum(d.y ** 2))
        assert pg.weights.sum() == pytest.approx(1.0, abs=1e-10)
        # flat prior: inverse-gamma with shape n1/2 - 1 and scale |Y|^2/2
        n1 = d.y.size
        assert pg.mean() == pytest.approx(yy / (n1 - 4), rel=1e-3)
        mode = pg.grid[np.argmax(pg.log_density)]
        assert mode == pytest.approx(yy / n1, rel=0.03)

    def test_cauchy_posterior(self):
        d = generate_dataset(ModelParams.constant_mean(0.5, 200, 1.0, 1.0), seed=4)
        pg = P.posterior_grid_iid(d, MeanPrior.cauchy(1.0), VariancePrior.exponential(1.0))
        assert np.all(np.isfinite(pg.weights)) and 0.5 < pg.mean() < 2.0
