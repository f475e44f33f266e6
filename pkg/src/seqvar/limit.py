"""Limit shapes of the mixture posterior and their localization quantities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import kernels
from .errors import DomainError, InfeasibleRegionError, UsageError
from .model import TAG_SAMPLER, SuffStats, substream
from .posterior import PosteriorGrid, normalize_on_grid

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class LimitParams:
    """Plug-in values for sigma_0^2 and mean(mu_0^2) together with the data statistics."""

    sigma0_sq_plug: float
    mu_bar_sq_plug: float
    stats: SuffStats

    def __post_init__(self):
        if not self.sigma0_sq_plug > 0:
            raise DomainError("sigma0_sq plug must be positive")
        if not self.mu_bar_sq_plug >= 0:
            raise DomainError("mu_bar_sq plug must be non-negative")
        if not self.stats.complete:
            raise UsageError("limit densities need both blocks non-empty")

    @classmethod
    def empirical(cls, stats: SuffStats):
        """sigma_0^2 <- Ybar^2 and mean(mu_0^2) <- max(0, Zbar^2 - Ybar^2)."""
        return cls(stats.y_bar_sq, max(0.0, stats.z_bar_sq - stats.y_bar_sq), stats)

    @classmethod
    def oracle(cls, stats: SuffStats, sigma0_sq, mu_bar_sq):
        return cls(float(sigma0_sq), float(mu_bar_sq), stats)

    def _args(self):
        st = self.stats
        return st.y_bar_sq, st.z_bar_sq, st.n1, st.n2, self.sigma0_sq_plug, self.mu_bar_sq_plug

    @property
    def sd_gauss(self):
        """Standard deviation of the Gaussian factor, sqrt(2 s0^2 / n1)."""
        return self.sigma0_sq_plug * math.sqrt(2.0 / self.stats.n1)

    @property
    def sd_theta(self):
        return (self.sigma0_sq_plug + self.mu_bar_sq_plug) * math.sqrt(2.0 / self.stats.n2)


def _vec(x):
    a = np.asarray(x, dtype=float)
    return a, a.ndim == 0


def limit_logpdf(sigma_sq, p: LimitParams):
    """Gaussian factor around Ybar^2 times the normal tail factor centred at Zbar^2."""
    x, scalar = _vec(sigma_sq)
    out = kernels.limit_logpdf(x.reshape(-1), *p._args()).reshape(x.shape)
    return float(out) if scalar else out


def gauss_limit_logpdf(sigma_sq, p: LimitParams):
    x, scalar = _vec(sigma_sq)
    st = p.stats
    out = -(st.n1 / (4.0 * p.sigma0_sq_plug ** 2)) * (x - st.y_bar_sq) ** 2
    out = np.where(x < 0, -np.inf, out)
    return float(out) if scalar else out


def joint_limit_logpdf(sigma_sq, theta_sq, p: LimitParams):
    s, _ = _vec(sigma_sq)
    t = np.asarray(theta_sq, dtype=float)
    st = p.stats
    out = (-(st.n1 / (4.0 * p.sigma0_sq_plug ** 2)) * (s - st.y_bar_sq) ** 2
           - (st.n2 / (4.0 * (p.sigma0_sq_plug + p.mu_bar_sq_plug) ** 2)) * (t + s - st.z_bar_sq) ** 2)
    out = np.where((s < 0) | (t < 0), -np.inf, out)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------- localization


def _ratio(alpha):
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise UsageError("localization needs 0 < alpha < 1")
    return max(alpha / (1.0 - alpha), (1.0 - alpha) / alpha)


def zeta_n(n1, n2, alpha=None):
    """``min(1, 4 sqrt((1 + r) log n / min(n1, n2)))`` with r the block-size ratio.

    Without ``alpha`` the ratio falls back to ``n1/n2`` (or its inverse).
    """
    n = n1 + n2
    if min(n1, n2) < 1:
        raise UsageError("zeta_n needs both blocks non-empty")
    r = _ratio(alpha) if alpha is not None else max(n1 / n2, n2 / n1)
    return min(1.0, 4.0 * math.sqrt((1.0 + r) * math.log(n) / min(n1, n2)))


@dataclass(frozen=True)
class LocalizationReport:
    zeta_n: float
    delta_n: float
    C: float
    B1: tuple
    B2: tuple
    in_A_n: bool | None
    B1_unbounded: bool


def localization(stats: SuffStats, alpha, n, sigma0_sq=None, mu_bar_sq=None) -> LocalizationReport:
    """Localization radii, sets B1 and B2, and membership in the event A_n.

    ``in_A_n`` is ``None`` unless the true ``sigma0_sq`` and ``mu_bar_sq`` are given.
    """
    r = _ratio(alpha)
    if stats.n != int(n):
        raise UsageError(f"stats describe n = {stats.n}, not {n}")
    zeta = zeta_n(stats.n1, stats.n2, alpha)
    C = math.sqrt(16.0 + 16.0 * r)
    delta = zeta / C
    y, z = stats.y_bar_sq, stats.z_bar_sq
    unbounded = zeta >= 1.0
    b1_hi = math.inf if unbounded else y / (1.0 - zeta)
    B1 = (y / (1.0 + zeta), b1_hi)
    b2_hi = math.inf if unbounded else z / (1.0 - zeta) - y / (1.0 + zeta)
    B2 = (max(0.0, z / (1.0 + zeta) - b1_hi) if not unbounded else 0.0, b2_hi)
    in_a = None
    if sigma0_sq is not None and mu_bar_sq is not None:
        dev = abs((z - mu_bar_sq) / sigma0_sq - 1.0) + abs(y / sigma0_sq - 1.0)
        in_a = bool(z > y / (1.0 + delta / 2.0) and dev <= delta)
    return LocalizationReport(zeta, delta, C, B1, B2, in_a, unbounded)


def _log_diff_ndtr(a, b):
    """``log(Phi(b) - Phi(a))`` for ``a <= b`` without cancellation in either tail."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    upper = a > 0
    # in the upper tail work with survival functions Phi(-a) - Phi(-b)
    hi = np.where(upper, special.log_ndtr(-a), special.log_ndtr(b))
    lo = np.where(upper, special.log_ndtr(-b), special.log_ndtr(a))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = hi + np.log1p(-np.exp(lo - hi))
    return np.where(b > a, out, -np.inf)


def _log_ig_interval(x_lo, x_hi, shape, scale):
    """``log(F(x_hi) - F(x_lo))`` for the inverse-gamma cdf ``F(x) = Q(shape, scale/x)``."""
    u_lo = np.where(x_lo > 0, scale / np.where(x_lo > 0, x_lo, 1.0), np.inf)
    u_hi = np.where(np.isfinite(x_hi), scale / np.where(np.isfinite(x_hi), x_hi, 1.0), 0.0)
    # F(x_hi) - F(x_lo) = P(u_hi < G < u_lo) for G ~ Gamma(shape)
    lower = special.gammainc(shape, u_lo) - special.gammainc(shape, u_hi)
    upper = special.gammaincc(shape, u_hi) - special.gammaincc(shape, u_lo)
    val = np.where(u_hi > shape, upper, lower)
    with np.errstate(divide="ignore"):
        return np.log(np.maximum(val, 0.0))


def localized_pi1(sigma_sq, stats: SuffStats, loc: LocalizationReport):
    """Inverse-gamma factors restricted to B1 x B2, theta^2 integrated in closed form."""
    from .specfun import log_inv_gamma_pdf

    s, scalar = _vec(sigma_sq)
    a1, b1 = stats.n1 / 2.0 - 1.0, stats.n1 * stats.y_bar_sq / 2.0
    a2, b2 = stats.n2 / 2.0 - 1.0, stats.n2 * stats.z_bar_sq / 2.0
    if not (a1 > 0 and a2 > 0):
        raise UsageError("localized density needs n1 > 2 and n2 > 2")
    inside = (s >= loc.B1[0]) & (s <= loc.B1[1])
    safe = np.where(s > 0, s, 1.0)
    body = log_inv_gamma_pdf(safe, a1, b1) + _log_ig_interval(safe + loc.B2[0], safe + loc.B2[1], a2, b2)
    out = np.where(inside & (s > 0), body, -np.inf)
    return float(out) if scalar else out


def localized_pi2(sigma_sq, p: LimitParams, loc: LocalizationReport):
    """Quadratic expansion of ``localized_pi1`` with theta^2 integrated over B2."""
    s, scalar = _vec(sigma_sq)
    st = p.stats
    v = (p.sigma0_sq_plug + p.mu_bar_sq_plug) * math.sqrt(2.0 / st.n2)
    g = -(st.n1 / (4.0 * p.sigma0_sq_plug ** 2)) * (s - st.y_bar_sq) ** 2
    a = (loc.B2[0] + s - st.z_bar_sq) / v
    b = (loc.B2[1] + s - st.z_bar_sq) / v
    body = g + math.log(math.sqrt(2.0 * math.pi) * v) + _log_diff_ndtr(a, b)
    inside = (s >= loc.B1[0]) & (s <= loc.B1[1])
    out = np.where(inside, body, -np.inf)
    return float(out) if scalar else out


# ---------------------------------------------------------------- sampling and extraction


@dataclass(frozen=True, eq=False)
class LimitSample:
    samples: np.ndarray
    acceptance_rate: float
    proposals: int
    seed: int


def sample_limit(p: LimitParams, count, seed, block=65536, max_proposals=10_000_000, min_rate=1e-6):
    """Rejection sampler: keep xi ~ N(Ybar^2, 2 s0^2/n1) when 0 <= xi <= eta.

    ``eta ~ N(Zbar^2, 2 (s0 + mu)^2 / n2)``. Proposals come in fixed blocks,
    each from its own substream, and accepted values are merged in block order.
    """
    count = int(count)
    if count < 1:
        raise UsageError("count must be at least 1")
    st = p.stats
    sx, se = p.sd_gauss, p.sd_theta
    kept = []
    have = 0
    used = 0
    accepted = 0
    b = 0
    while have < count:
        if used >= max_proposals and accepted / used < min_rate:
            raise InfeasibleRegionError(f"acceptance rate {accepted / used:.3g} after {used} proposals")
        rng = substream(seed, TAG_SAMPLER, b)
        xi = st.y_bar_sq + sx * rng.standard_normal(block)
        eta = st.z_bar_sq + se * rng.standard_normal(block)
        ok = (xi >= 0.0) & (xi <= eta)
        acc = xi[ok]
        need = count - have
        if acc.size >= need:
            # count proposals only up to the one that completes the sample
            last = np.flatnonzero(ok)[need - 1]
            used += int(last) + 1
            accepted += need
            kept.append(acc[:need])
            have = count
        else:
            used += block
            accepted += acc.size
            kept.append(acc)
            have += acc.size
        b += 1
    return LimitSample(np.concatenate(kept), accepted / used, used, int(seed))


def limit_map(p: LimitParams):
    y, z, n1, n2, s0, mb = p._args()
    return float(kernels.limit_map_batch([y], [z], n1, n2, [s0], [mb])[0])


def limit_mean(p: LimitParams):
    y, z, n1, n2, s0, mb = p._args()
    return float(kernels.limit_mean_batch([y], [z], n1, n2, [s0], [mb])[0])


def limit_map_batch(y_bar_sq, z_bar_sq, n1, n2, sigma0_sq_plug, mu_bar_sq_plug):
    return kernels.limit_map_batch(y_bar_sq, z_bar_sq, n1, n2, sigma0_sq_plug, mu_bar_sq_plug)


def limit_mean_batch(y_bar_sq, z_bar_sq, n1, n2, sigma0_sq_plug, mu_bar_sq_plug, modes=None):
    return kernels.limit_mean_batch(y_bar_sq, z_bar_sq, n1, n2, sigma0_sq_plug, mu_bar_sq_plug, modes)


def limit_grid(p: LimitParams, grid=None, gaussian_only=False, points=4096) -> PosteriorGrid:
    """Normalized limit density on ``grid`` (default: a uniform grid over its bulk)."""
    if grid is None:
        st = p.stats
        w = 40.0 * max(p.sd_gauss, p.sd_theta)
        lo = max(0.0, min(st.y_bar_sq, st.z_bar_sq) - w)
        hi = st.y_bar_sq + w
        grid = np.linspace(lo, hi, points)
    f = gauss_limit_logpdf if gaussian_only else limit_logpdf
    return normalize_on_grid(f(np.asarray(grid, dtype=float), p), grid)
