"""Point estimators of the variance; all are functions of the sufficient statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import limit
from .errors import UnavailableStatisticError, UsageError
from .model import SuffStats

PLUG_MODES = ("empirical", "oracle")
LIMIT_KINDS = ("map_limit", "mean_limit")
KINDS = ("mle", "adjusted_profile", "switching") + LIMIT_KINDS


@dataclass(frozen=True)
class EstimatorKind:
    tag: str
    plug_mode: str | None = None

    def __post_init__(self):
        if self.tag not in KINDS:
            raise UsageError(f"unknown estimator {self.tag!r}; expected one of {KINDS}")
        if self.tag in LIMIT_KINDS:
            if self.plug_mode not in PLUG_MODES:
                raise UsageError(f"{self.tag} needs plug_mode in {PLUG_MODES}")
        elif self.plug_mode is not None:
            raise UsageError(f"{self.tag} takes no plug_mode")


def mle(stats: SuffStats):
    """Joint maximum likelihood estimate ``|Y|^2 / n``."""
    if stats.n1 == 0:
        return 0.0
    return stats.n1 * stats.y_bar_sq / stats.n


def adjusted_profile(stats: SuffStats):
    """``|Y|^2 / n1``, the MLE from the zero-mean block alone."""
    return stats.y_bar_sq


def switching_estimator(stats: SuffStats):
    """Ybar^2 if Ybar^2 < Zbar^2, else the pooled Xbar^2 (ties go to Xbar^2)."""
    if not stats.complete:
        raise UnavailableStatisticError("switching estimator needs both blocks")
    return stats.y_bar_sq if stats.y_bar_sq < stats.z_bar_sq else stats.x_bar_sq


def limit_params(stats: SuffStats, plug_mode="empirical", oracle_params=None):
    if plug_mode == "empirical":
        if oracle_params is not None:
            raise UsageError("oracle_params given with empirical plugs")
        return limit.LimitParams.empirical(stats)
    if plug_mode == "oracle":
        if oracle_params is None:
            raise UsageError("oracle plugs need oracle_params=(sigma0_sq, mu_bar_sq)")
        s0, mb = oracle_params
        return limit.LimitParams.oracle(stats, s0, mb)
    raise UsageError(f"unknown plug_mode {plug_mode!r}")


def limit_estimators(stats: SuffStats, kind, plug_mode="empirical", oracle_params=None):
    """MAP or mean of the limit density with plugs assembled per ``plug_mode``."""
    p = limit_params(stats, plug_mode, oracle_params)
    if kind == "map_limit":
        return limit.limit_map(p)
    if kind == "mean_limit":
        return limit.limit_mean(p)
    raise UsageError(f"{kind!r} is not a limit-based estimator")


def estimate(stats: SuffStats, kind: EstimatorKind, oracle_params=None):
    if kind.tag == "mle":
        return mle(stats)
    if kind.tag == "adjusted_profile":
        return adjusted_profile(stats)
    if kind.tag == "switching":
        return switching_estimator(stats)
    return limit_estimators(stats, kind.tag, kind.plug_mode, oracle_params)


def batch_estimates(tag, n1, n2, y_bar_sq, z_bar_sq, plug_mode=None, sigma0_sq=None, mu_bar_sq=None):
    """Vectorized estimates over replications sharing ``(n1, n2)``.

    ``map_limit`` and ``mean_limit`` both need the MAP; callers that want both
    should use ``batch_limit_pair`` to share it.
    """
    y = np.asarray(y_bar_sq, dtype=float)
    z = np.asarray(z_bar_sq, dtype=float)
    n = n1 + n2
    if tag == "mle":
        return n1 * y / n
    if tag == "adjusted_profile":
        return y.copy()
    if tag == "switching":
        return np.where(y < z, y, (n1 * y + n2 * z) / n)
    if tag in LIMIT_KINDS:
        m, mean = batch_limit_pair(n1, n2, y, z, plug_mode, sigma0_sq, mu_bar_sq)
        return m if tag == "map_limit" else mean
    raise UsageError(f"unknown estimator {tag!r}")


def _plugs(y, z, plug_mode, sigma0_sq, mu_bar_sq):
    if plug_mode == "empirical":
        return y, np.maximum(0.0, z - y)
    if plug_mode == "oracle":
        if sigma0_sq is None or mu_bar_sq is None:
            raise UsageError("oracle plugs need sigma0_sq and mu_bar_sq")
        return np.full(y.shape, float(sigma0_sq)), np.full(y.shape, float(mu_bar_sq))
    raise UsageError(f"unknown plug_mode {plug_mode!r}")


def batch_limit_pair(n1, n2, y_bar_sq, z_bar_sq, plug_mode, sigma0_sq=None, mu_bar_sq=None):
    y = np.asarray(y_bar_sq, dtype=float)
    z = np.asarray(z_bar_sq, dtype=float)
    s0, mb = _plugs(y, z, plug_mode, sigma0_sq, mu_bar_sq)
    modes = limit.limit_map_batch(y, z, n1, n2, s0, mb)
    means = limit.limit_mean_batch(y, z, n1, n2, s0, mb, modes)
    return modes, means
