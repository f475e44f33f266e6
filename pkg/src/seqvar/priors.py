"""Priors on the means (nu), on the variance (pi) and on theta^2 (gamma)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from . import kernels
from .errors import DomainError, UsageError
from .specfun import log_inv_gamma_pdf

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

MEAN_FAMILIES = {
    "gaussian": ("theta_sq",),
    "cauchy": ("scale",),
    "laplace": ("scale",),
    "point_mass": ("c",),
    "uniform_improper": (),
}

POSITIVE_FAMILIES = {
    "inverse_gamma": ("a", "b"),
    "log_normal": ("m", "s"),
    "exponential": ("rate",),
    "improper_flat": (),
    "point_mass": ("c",),
}


def _check_params(family, params, table, what):
    if family not in table:
        raise UsageError(f"unknown {what} family {family!r}; expected one of {sorted(table)}")
    names = table[family]
    if len(params) != len(names):
        raise UsageError(f"{what} family {family!r} takes parameters {names}, got {len(params)} values")
    vals = tuple(float(p) for p in params)
    if not all(math.isfinite(v) for v in vals):
        raise DomainError(f"{what} parameters must be finite")
    return vals


@dataclass(frozen=True)
class MeanPrior:
    """i.i.d. prior nu on each mean component."""

    family: str
    params: tuple = ()

    def __post_init__(self):
        vals = _check_params(self.family, self.params, MEAN_FAMILIES, "mean prior")
        if self.family in ("gaussian", "cauchy", "laplace") and not vals[0] > 0:
            raise DomainError(f"{self.family} prior needs a positive parameter")
        object.__setattr__(self, "params", vals)

    @classmethod
    def gaussian(cls, theta_sq):
        return cls("gaussian", (theta_sq,))

    @classmethod
    def cauchy(cls, scale=1.0):
        return cls("cauchy", (scale,))

    @classmethod
    def laplace(cls, scale=1.0):
        return cls("laplace", (scale,))

    @classmethod
    def point_mass(cls, c=0.0):
        return cls("point_mass", (c,))

    @classmethod
    def uniform_improper(cls):
        return cls("uniform_improper", ())

    @property
    def proper(self):
        return self.family != "uniform_improper"

    @property
    def scale(self):
        """Natural length scale of the family (standard deviation for the Gaussian)."""
        if self.family == "gaussian":
            return math.sqrt(self.params[0])
        if self.family in ("cauchy", "laplace"):
            return self.params[0]
        return 0.0

    def kernel_code(self):
        code = {"gaussian": kernels.FAM_GAUSSIAN, "cauchy": kernels.FAM_CAUCHY,
                "laplace": kernels.FAM_LAPLACE}.get(self.family)
        if code is None:
            raise UsageError(f"{self.family} has no quadrature kernel")
        return code, self.params[0], self.scale

    def sample(self, size, rng):
        if not self.proper:
            raise UsageError("cannot sample from the improper uniform prior")
        if self.family == "gaussian":
            return math.sqrt(self.params[0]) * rng.standard_normal(size)
        if self.family == "cauchy":
            return self.params[0] * rng.standard_cauchy(size)
        if self.family == "laplace":
            return rng.laplace(0.0, self.params[0], size)
        return np.full(size, self.params[0])


@dataclass(frozen=True)
class PositivePrior:
    """Density on (0, inf); shared by the variance prior and the hyperprior."""

    family: str
    params: tuple = ()

    def __post_init__(self):
        vals = _check_params(self.family, self.params, POSITIVE_FAMILIES, "positive prior")
        if self.family in ("inverse_gamma", "exponential") and not all(v > 0 for v in vals):
            raise DomainError(f"{self.family} parameters must be positive")
        if self.family == "log_normal" and not vals[1] > 0:
            raise DomainError("log_normal needs s > 0")
        if self.family == "point_mass" and not vals[0] > 0:
            raise DomainError("point mass location must be positive")
        object.__setattr__(self, "params", vals)

    @classmethod
    def inverse_gamma(cls, a, b):
        return cls("inverse_gamma", (a, b))

    @classmethod
    def log_normal(cls, m, s):
        return cls("log_normal", (m, s))

    @classmethod
    def exponential(cls, rate):
        return cls("exponential", (rate,))

    @classmethod
    def improper_flat(cls):
        return cls("improper_flat", ())

    @property
    def proper(self):
        return self.family != "improper_flat"

    def logpdf(self, x):
        xa = np.asarray(x, dtype=float)
        if np.any(~(xa > 0)):
            raise DomainError("positive-prior density requires a positive argument")
        f = self.family
        if f == "inverse_gamma":
            out = log_inv_gamma_pdf(xa, *self.params)
        elif f == "log_normal":
            m, s = self.params
            lx = np.log(xa)
            out = -lx - math.log(s) - _LOG_SQRT_2PI - 0.5 * ((lx - m) / s) ** 2
        elif f == "exponential":
            out = math.log(self.params[0]) - self.params[0] * xa
        elif f == "improper_flat":
            out = np.zeros_like(xa)
        else:
            raise UsageError("point_mass has no Lebesgue density")
        return float(out) if np.ndim(out) == 0 else out

    def mode(self):
        f = self.family
        if f == "inverse_gamma":
            return self.params[1] / (self.params[0] + 1.0)
        if f == "log_normal":
            return math.exp(self.params[0] - self.params[1] ** 2)
        if f == "point_mass":
            return self.params[0]
        return 0.0

    def log_sup_beyond(self, t):
        """``log sup_{x >= t} density(x)``; every family is non-increasing past its mode."""
        if self.family == "improper_flat":
            return 0.0
        return float(self.logpdf(max(t, self.mode()))) if max(t, self.mode()) > 0 else math.inf

    def kernel_code(self):
        """Arguments for ``kernels.theta_log_integral``: code, params, window and sup."""
        f = self.family
        if f == "inverse_gamma":
            a, b = self.params
            mode = b / (a + 1.0)
            sd = mode / math.sqrt(a + 1.0)
            scale = float(stats.invgamma.ppf(0.99, a, scale=b))
            return kernels.POS_INV_GAMMA, a, b, mode, sd, scale, self.log_sup_beyond
        if f == "log_normal":
            m, s = self.params
            mode = math.exp(m - s * s)
            return kernels.POS_LOG_NORMAL, m, s, mode, mode * s, math.exp(m + 2.33 * s), self.log_sup_beyond
        if f == "exponential":
            r = self.params[0]
            return kernels.POS_EXPONENTIAL, r, 0.0, 0.0, 1.0 / r, 4.61 / r, self.log_sup_beyond
        if f == "improper_flat":
            return kernels.POS_FLAT, 0.0, 0.0, 0.0, 0.0, 0.0, self.log_sup_beyond
        raise UsageError("point_mass hyperprior is handled in closed form")

    def sample(self, size, rng):
        f = self.family
        if f == "inverse_gamma":
            a, b = self.params
            return b / rng.gamma(a, 1.0, size)
        if f == "log_normal":
            return np.exp(self.params[0] + self.params[1] * rng.standard_normal(size))
        if f == "exponential":
            return rng.exponential(1.0 / self.params[0], size)
        if f == "point_mass":
            return np.full(size, self.params[0])
        raise UsageError("cannot sample from an improper prior")


class VariancePrior(PositivePrior):
    """Prior density pi on sigma^2."""

    def __post_init__(self):
        if self.family == "point_mass":
            raise UsageError("the variance prior must have a Lebesgue density")
        super().__post_init__()


class Hyperprior(PositivePrior):
    """Prior density gamma on theta^2 in the hierarchical Gaussian mixture."""

    @classmethod
    def point_mass(cls, c):
        return cls("point_mass", (c,))


def mean_prior_logpdf(nu: MeanPrior, mu):
    """Log density of nu; the improper uniform returns 0 by convention."""
    mua = np.asarray(mu, dtype=float)
    if not np.all(np.isfinite(mua)):
        raise DomainError("mean prior density requires finite mu")
    f = nu.family
    if f == "gaussian":
        t = nu.params[0]
        out = -0.5 * math.log(2.0 * math.pi * t) - 0.5 * mua * mua / t
    elif f == "cauchy":
        s = nu.params[0]
        out = -math.log(math.pi * s) - np.log1p((mua / s) ** 2)
    elif f == "laplace":
        s = nu.params[0]
        out = -math.log(2.0 * s) - np.abs(mua) / s
    elif f == "point_mass":
        out = np.where(mua == nu.params[0], np.inf, -np.inf)
    else:
        out = np.zeros_like(mua)
    return float(out) if np.ndim(out) == 0 else out


def tail_ratio_Q(nu: MeanPrior, u):
    """``nu([-u, u]^c) / nu([-u, u])``."""
    if not nu.proper:
        raise UsageError("tail ratio is undefined for the improper uniform prior")
    u = float(u)
    if not u > 0:
        raise DomainError("tail ratio requires u > 0")
    f = nu.family
    if f == "gaussian":
        x = u / math.sqrt(2.0 * nu.params[0])
        outside, inside = special.erfc(x), special.erf(x)
    elif f == "cauchy":
        inside = 2.0 * math.atan(u / nu.params[0]) / math.pi
        # atan(1/x) form keeps the outside mass accurate far in the tail
        outside = 2.0 * math.atan(nu.params[0] / u) / math.pi
    elif f == "laplace":
        outside = math.exp(-u / nu.params[0])
        inside = -math.expm1(-u / nu.params[0])
    else:
        inside = 1.0 if abs(nu.params[0]) <= u else 0.0
        outside = 1.0 - inside
    if inside == 0.0:
        return math.inf
    return float(outside / inside)


def variance_prior_logpdf(pi: PositivePrior, sigma_sq):
    """Log density of pi at sigma^2; the improper flat prior returns 0."""
    return pi.logpdf(sigma_sq)


def hyperprior_logpdf(gamma: PositivePrior, theta_sq):
    return gamma.logpdf(theta_sq)
