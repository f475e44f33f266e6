"""Marginal posterior of the variance, the score identity and grid utilities.

Unnormalized log values are defined up to a sigma^2-free constant. In
particular ``log_marginal_lik_iid`` omits the ``-(n/2) log(2 pi)`` factor.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateDensityError, DomainError, UsageError
from .model import Dataset, SuffStats, suff_stats
from .priors import MeanPrior, PositivePrior
from .specfun import log_inv_gamma_pdf

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GaussPriorSpec:
    theta_sq: float

    def __post_init__(self):
        if not self.theta_sq > 0:
            raise DomainError("theta_sq must be positive")


def _sigma_array(sigma_sq):
    s = np.asarray(sigma_sq, dtype=float)
    if np.any(~(s > 0)) or np.any(~np.isfinite(s)):
        raise DomainError("sigma_sq must be positive and finite")
    return s, s.ndim == 0


def _out(arr, scalar):
    return float(arr) if scalar else arr


def _sum_sq(v):
    return math.fsum(float(x) * float(x) for x in v)


def _per_coordinate(s2, z, nu: MeanPrior):
    """Per-coordinate ``(log I_i, V_i)`` at a single sigma^2."""
    f = nu.family
    if f == "uniform_improper":
        return np.full(z.size, 0.5 * math.log(s2) + _HALF_LOG_2PI), np.full(z.size, s2)
    if f == "point_mass":
        d2 = (z - nu.params[0]) ** 2
        return -0.5 * d2 / s2, d2
    code, par, scale = nu.kernel_code()
    logi, v, _ = kernels.mean_integrals(z, s2, code, par, scale)
    return logi, v


def log_marginal_lik_iid(sigma_sq, data: Dataset, nu: MeanPrior):
    """``-n log(sigma) - |Y|^2/(2 sigma^2) + sum_i log int exp(-(Z_i-mu)^2/(2 sigma^2)) dnu(mu)``."""
    s, scalar = _sigma_array(sigma_sq)
    yy = _sum_sq(data.y)
    n = data.n
    out = np.empty(s.shape)
    flat = out.reshape(-1)
    for k, s2 in enumerate(s.reshape(-1)):
        logi, _ = _per_coordinate(float(s2), data.z, nu)
        flat[k] = -0.5 * n * math.log(s2) - yy / (2.0 * s2) + math.fsum(logi)
    return _out(out, scalar)


def nuisance_spread_V(sigma_sq, z, nu: MeanPrior):
    """``sum_i E[(Z_i - mu)^2 | Z_i, sigma^2]`` under the coordinatewise posterior."""
    z = np.asarray(z, dtype=float).reshape(-1)
    s, scalar = _sigma_array(sigma_sq)
    out = np.empty(s.shape)
    flat = out.reshape(-1)
    for k, s2 in enumerate(s.reshape(-1)):
        if nu.family == "uniform_improper":
            flat[k] = z.size * float(s2)
        else:
            flat[k] = math.fsum(_per_coordinate(float(s2), z, nu)[1])
    return _out(out, scalar)


def score(sigma_sq, data: Dataset, nu: MeanPrior):
    """Derivative of the log marginal likelihood in sigma^2 via the spread identity."""
    s, scalar = _sigma_array(sigma_sq)
    yy = _sum_sq(data.y)
    v = np.asarray(nuisance_spread_V(s, data.z, nu))
    return _out((yy + v) / (2.0 * s * s) - data.n / (2.0 * s), scalar)


def _log_prior(pi, s):
    return 0.0 if pi is None else pi.logpdf(s)


def log_posterior_gaussian_prior(sigma_sq, stats: SuffStats, spec, pi: PositivePrior | None = None):
    """Unnormalized log posterior under i.i.d. N(0, theta^2) means (closed form)."""
    theta_sq = spec.theta_sq if isinstance(spec, GaussPriorSpec) else float(spec)
    if not theta_sq >= 0:
        raise DomainError("theta_sq must be non-negative")
    s, scalar = _sigma_array(sigma_sq)
    n1, n2 = stats.n1, stats.n2
    out = np.zeros(s.shape)
    if n1:
        out = out - 0.5 * n1 * np.log(s) - n1 * stats.y_bar_sq / (2.0 * s)
    if n2:
        t = theta_sq + s
        out = out - 0.5 * n2 * np.log(t) - n2 * stats.z_bar_sq / (2.0 * t)
    return _out(out + _log_prior(pi, s), scalar)


def _ig_shapes(stats: SuffStats):
    if not stats.complete or stats.n1 <= 4 or stats.n2 <= 4:
        raise UsageError("the mixture posterior needs n1 > 4 and n2 > 4")
    a1, b1 = stats.n1 / 2.0 - 1.0, stats.n1 * stats.y_bar_sq / 2.0
    a2, b2 = stats.n2 / 2.0 - 1.0, stats.n2 * stats.z_bar_sq / 2.0
    if not (b1 > 0 and b2 > 0):
        raise DomainError("the mixture posterior needs positive Ybar^2 and Zbar^2")
    return a1, b1, a2, b2


def log_joint_mixture(sigma_sq, theta_sq, stats: SuffStats, gamma: PositivePrior, pi: PositivePrior | None = None):
    """Unnormalized log joint posterior of ``(sigma^2, theta^2)``."""
    a1, b1, a2, b2 = _ig_shapes(stats)
    s, _ = _sigma_array(sigma_sq)
    t = np.asarray(theta_sq, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("theta_sq must be positive")
    out = log_inv_gamma_pdf(s, a1, b1) + log_inv_gamma_pdf(s + t, a2, b2) + gamma.logpdf(t) + _log_prior(pi, s)
    return float(out) if np.ndim(out) == 0 else out


def log_theta_integral(sigma_sq, stats: SuffStats, gamma: PositivePrior):
    """``log int_0^inf f_IG(a2, b2)(sigma^2 + t) gamma(t) dt``."""
    _, _, a2, b2 = _ig_shapes(stats)
    s, scalar = _sigma_array(sigma_sq)
    flat = s.reshape(-1)
    if gamma.family == "point_mass":
        res = log_inv_gamma_pdf(flat + gamma.params[0], a2, b2)
    else:
        code, p1, p2, gmode, gsd, gscale, sup_fn = gamma.kernel_code()
        res = kernels.theta_log_integral(flat, a2, b2, code, p1, p2, gmode, gsd, gscale, sup_fn)
    return _out(np.asarray(res).reshape(s.shape), scalar)


def log_posterior_mixture(sigma_sq, stats: SuffStats, gamma: PositivePrior, pi: PositivePrior | None = None):
    """Unnormalized log marginal posterior under the hierarchical Gaussian mixture prior."""
    a1, b1, _, _ = _ig_shapes(stats)
    s, scalar = _sigma_array(sigma_sq)
    out = log_inv_gamma_pdf(s, a1, b1) + np.asarray(log_theta_integral(s, stats, gamma)) + _log_prior(pi, s)
    return _out(out, scalar)


# ---------------------------------------------------------------- grids


@dataclass(frozen=True, eq=False)
class PosteriorGrid:
    """Normalized density on an increasing sigma^2 grid.

    ``weights`` are trapezoid point masses (half cells at the ends) and sum to
    one; ``density`` is the normalized density at the grid points.
    """

    grid: np.ndarray
    log_density: np.ndarray
    weights: np.ndarray
    density: np.ndarray

    def mean(self):
        return float(np.sum(self.weights * self.grid))

    def cdf(self, x):
        return _cdf(self, np.asarray(x, dtype=float))


def _trapezoid_point_weights(grid):
    h = np.diff(grid)
    w = np.zeros_like(grid)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def normalize_on_grid(logpdf, grid) -> PosteriorGrid:
    """Trapezoid normalization of ``logpdf`` (callable or array of values) on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 16:
        raise UsageError("normalization needs at least 16 grid points")
    if np.any(np.diff(grid) <= 0):
        raise UsageError("grid must be strictly increasing")
    vals = np.asarray(logpdf(grid) if callable(logpdf) else logpdf, dtype=float).reshape(-1)
    if vals.shape != grid.shape:
        raise UsageError("log density and grid have different lengths")
    if np.any(np.isnan(vals)) or np.any(vals == np.inf):
        raise DegenerateDensityError("log density is NaN or +inf on the grid")
    m = vals.max()
    if m == -np.inf:
        raise DegenerateDensityError("log density is -inf on every grid point")
    rel = np.exp(vals - m)
    tw = _trapezoid_point_weights(grid)
    total = float(np.sum(rel * tw))
    if not total > 0:
        raise DegenerateDensityError("density has zero trapezoid mass on the grid")
    dens = rel / total
    w = dens * tw
    w = w / w.sum()
    return PosteriorGrid(grid, vals, w, dens)


def _cell_cum(pg: PosteriorGrid):
    h = np.diff(pg.grid)
    cells = 0.5 * h * (pg.density[:-1] + pg.density[1:])
    return np.concatenate([[0.0], np.cumsum(cells)])


def _cdf(pg: PosteriorGrid, x):
    g, d = pg.grid, pg.density
    cum = _cell_cum(pg)
    total = cum[-1]
    xc = np.clip(x, g[0], g[-1])
    i = np.clip(np.searchsorted(g, xc, side="right") - 1, 0, g.size - 2)
    h = g[i + 1] - g[i]
    u = xc - g[i]
    slope = (d[i + 1] - d[i]) / h
    part = d[i] * u + 0.5 * slope * u * u
    return (cum[i] + part) / total


def interval_mass(pg: PosteriorGrid, lo, hi):
    """Mass of ``[lo, hi]`` under the piecewise-linear density, cut points interpolated."""
    if hi < lo:
        raise UsageError("interval_mass needs lo <= hi")
    if hi == lo:
        return 0.0
    val = float(_cdf(pg, np.array(hi)) - _cdf(pg, np.array(lo)))
    return min(max(val, 0.0), 1.0)


def _interp_log(pg: PosteriorGrid, x):
    # log-linear interpolation inside the span, zero density outside it
    with np.errstate(divide="ignore"):
        ld = np.log(pg.density)
    inside = (x >= pg.grid[0]) & (x <= pg.grid[-1])
    out = np.full(x.shape, -np.inf)
    xi = x[inside]
    i = np.clip(np.searchsorted(pg.grid, xi, side="right") - 1, 0, pg.grid.size - 2)
    a, b = ld[i], ld[i + 1]
    t = (xi - pg.grid[i]) / (pg.grid[i + 1] - pg.grid[i])
    both = np.isfinite(a) & np.isfinite(b)
    val = np.where(both, a + t * (np.where(both, b, 0.0) - np.where(both, a, 0.0)), -np.inf)
    val = np.where(t == 0.0, a, np.where(t == 1.0, b, val))
    out[inside] = val
    return np.exp(out)


def _int_min_linear(fa, fb, ga, gb, h):
    """Exact integral of ``min(f, g)`` for linear f, g on a cell of width h."""
    da, db = fa - ga, fb - gb
    no_cross = da * db >= 0
    lin = 0.5 * h * np.where(da + db <= 0, fa + fb, ga + gb)
    denom = np.where(no_cross, 1.0, da - db)
    t = np.where(no_cross, 0.0, da / denom)
    m_cross = fa + t * (fb - fa)
    left = np.where(da < 0, fa, ga)
    right = np.where(db < 0, fb, gb)
    cross = 0.5 * h * (t * (left + m_cross) + (1.0 - t) * (m_cross + right))
    return np.where(no_cross, lin, cross)


def tv_distance(a: PosteriorGrid, b: PosteriorGrid):
    """Total variation ``1 - int min(p_a, p_b)`` on the union grid."""
    lo = max(a.grid[0], b.grid[0])
    hi = min(a.grid[-1], b.grid[-1])
    if not hi > lo:
        return 1.0
    g = np.union1d(a.grid, b.grid)
    g = g[(g >= lo) & (g <= hi)]
    pa = _interp_log(a, g)
    pb = _interp_log(b, g)
    h = np.diff(g)
    overlap = float(np.sum(_int_min_linear(pa[:-1], pa[1:], pb[:-1], pb[1:], h)))
    return min(max(1.0 - overlap, 0.0), 1.0)


def default_sigma_grid(stats: SuffStats, size=4096, spread=50.0, densify=4):
    """Geometric grid on ``[min/spread, spread*max]`` refined near Ybar^2 and Zbar^2."""
    from .limit import zeta_n

    y, z = stats.y_bar_sq, stats.z_bar_sq
    lo = min(y, z) / spread
    hi = spread * max(y, z)
    if not lo > 0:
        raise DomainError("default grid needs positive Ybar^2 and Zbar^2")
    base = np.geomspace(lo, hi, size)
    zeta = zeta_n(stats.n1, stats.n2)
    pieces = [base]
    if densify > 1:
        frac = np.arange(1, densify) / densify
        mids = base[:-1, None] * (base[1:, None] / base[:-1, None]) ** frac[None, :]
        mids = mids.reshape(-1)
        keep = np.zeros(mids.shape, dtype=bool)
        for c in (y, z):
            keep |= (mids >= c * (1.0 - 10.0 * zeta)) & (mids <= c * (1.0 + 10.0 * zeta))
        pieces.append(mids[keep])
    return np.unique(np.concatenate(pieces))


def posterior_grid_mixture(stats: SuffStats, gamma: PositivePrior, pi: PositivePrior | None = None, grid=None):
    grid = default_sigma_grid(stats) if grid is None else np.asarray(grid, dtype=float)
    return normalize_on_grid(log_posterior_mixture(grid, stats, gamma, pi), grid)


def posterior_grid_gaussian(stats: SuffStats, theta_sq, pi: PositivePrior | None = None, grid=None):
    grid = default_sigma_grid(stats) if grid is None else np.asarray(grid, dtype=float)
    return normalize_on_grid(log_posterior_gaussian_prior(grid, stats, theta_sq, pi), grid)


def _lik_and_spread(s2, data: Dataset, nu: MeanPrior, yy):
    logi, v = _per_coordinate(s2, data.z, nu)
    ll = -0.5 * data.n * math.log(s2) - yy / (2.0 * s2) + math.fsum(logi)
    return ll, math.fsum(v)


def _dlog_prior(pi, s2):
    if pi is None or pi.family == "improper_flat":
        return 0.0
    h = 1e-6 * s2
    return (pi.logpdf(s2 + h) - pi.logpdf(s2 - h)) / (2.0 * h)


def posterior_grid_iid(data: Dataset, nu: MeanPrior, pi: PositivePrior | None = None,
                       coarse=24, window=10.0, fine=81, spread=50.0):
    """Adaptive grid for the i.i.d.-prior posterior.

    The mode is the root of score + d log pi (Brent on a bracket grown from
    the pooled mean square); a uniform block of ``fine`` points covers
    ``window`` local standard deviations around it and ``coarse`` geometric
    points keep the tails in the normalization.
    """
    from scipy.optimize import brentq

    st = suff_stats(data)
    ref = [v for v in (st.y_bar_sq if st.n1 else None, st.z_bar_sq if st.n2 else None) if v]
    if not ref:
        raise DomainError("all observations are zero")
    yy = _sum_sq(data.y)
    n = data.n
    cache = {}

    def evaluate(s2):
        s2 = float(s2)
        if s2 not in cache:
            ll, v = _lik_and_spread(s2, data, nu, yy)
            cache[s2] = (ll + _log_prior(pi, s2), (yy + v) / (2.0 * s2 * s2) - n / (2.0 * s2) + _dlog_prior(pi, s2))
        return cache[s2]

    def grad(s2):
        return evaluate(s2)[1]

    lo_lim, hi_lim = min(ref) / spread, max(ref) * spread
    x0 = min(max(st.x_bar_sq, lo_lim), hi_lim)
    step = 1.0 + 4.0 / math.sqrt(n)
    g0 = grad(x0)
    a = b = x0
    if g0 > 0:
        while grad(b) > 0 and b < hi_lim:
            a, b = b, min(b * step, hi_lim)
            step = step * step
    else:
        while grad(a) < 0 and a > lo_lim:
            b, a = a, max(a / step, lo_lim)
            step = step * step
    if grad(a) > 0 > grad(b):
        mode = brentq(grad, a, b, xtol=1e-12, rtol=1e-9)
    else:
        mode = a if grad(a) <= 0 else b
    h = 1e-4 * mode
    slope = (grad(mode + h) - grad(mode - h)) / (2.0 * h)
    sd = 1.0 / math.sqrt(-slope) if slope < 0 else 0.1 * mode
    fg = mode + sd * np.linspace(-window, window, fine)
    grid = np.union1d(np.geomspace(lo_lim, hi_lim, coarse), fg[fg > 0])
    vals = np.array([evaluate(s2)[0] for s2 in grid])
    return normalize_on_grid(vals, grid)


def write_grid_csv(pg: PosteriorGrid, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sigma_sq", "log_density", "weight"])
        for s, l, wt in zip(pg.grid, pg.log_density, pg.weights):
            w.writerow([format(float(s), ".17g"), format(float(l), ".17g"), format(float(wt), ".17g")])
