"""Special functions and log-space primitives.

Every density in the package is carried as a natural log. These helpers
accept scalars or arrays and return the same shape, with ``-inf`` standing
for an exact zero.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .errors import DomainError, UsageError

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _as_float(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return float(arr) if scalar else arr


def log_gamma(x):
    """Natural log of the Gamma function for positive arguments."""
    arr, scalar = _as_float(x)
    if np.any(~(arr > 0)):
        raise DomainError("log_gamma requires x > 0")
    return _ret(special.gammaln(arr), scalar)


def std_normal_cdf(x):
    """Standard normal distribution function."""
    arr, scalar = _as_float(x)
    if np.any(np.isnan(arr)):
        raise DomainError("std_normal_cdf received NaN")
    return _ret(special.ndtr(arr), scalar)


def log_std_normal_sf(x):
    """``log(1 - Phi(x))`` without underflow for large positive ``x``."""
    arr, scalar = _as_float(x)
    if np.any(np.isnan(arr)):
        raise DomainError("log_std_normal_sf received NaN")
    return _ret(special.log_ndtr(-arr), scalar)


def log_inv_gamma_pdf(x, shape, scale):
    """Log density of the inverse-gamma law with the given shape and scale."""
    xa, scalar = _as_float(x)
    shape = float(shape)
    scale = float(scale)
    if not (shape > 0 and scale > 0):
        raise DomainError("inverse-gamma shape and scale must be positive")
    if np.any(~(xa > 0)):
        raise DomainError("inverse-gamma density requires x > 0")
    out = shape * math.log(scale) - special.gammaln(shape) - (shape + 1.0) * np.log(xa) - scale / xa
    return _ret(out, scalar)


def log_sum_exp(values):
    """Stable ``log(sum(exp(values)))``; ``-inf`` only if every entry is ``-inf``."""
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise UsageError("log_sum_exp of an empty sequence")
    if np.any(np.isnan(arr)) or np.any(arr == np.inf):
        raise DomainError("log_sum_exp entries must be finite or -inf")
    m = arr.max()
    if m == -np.inf:
        return -math.inf
    return float(m + math.log(np.sum(np.exp(arr - m))))


def mills_bounds(x):
    """Lower and upper Mills-ratio bounds on the Gaussian tail ``1 - Phi(x)``."""
    arr, scalar = _as_float(x)
    if np.any(~(arr > 0)):
        raise DomainError("mills_bounds requires x > 0")
    upper = np.exp(-0.5 * arr * arr - _LOG_SQRT_2PI) / arr
    lower = (arr * arr / (1.0 + arr * arr)) * upper
    if scalar:
        return float(lower), float(upper)
    return lower, upper
