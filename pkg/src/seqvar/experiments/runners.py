"""Monte Carlo experiments: the estimator bench and the posterior studies."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .. import limit as L
from .. import posterior as P
from ..errors import NumericalError, SeqvarError
from ..estimators import LIMIT_KINDS, batch_estimates, batch_limit_pair
from ..model import ModelParams, generate_dataset, split_sizes, suff_stats
from ..priors import MeanPrior, tail_ratio_Q
from . import engine
from .config import Config

log = logging.getLogger(__name__)


# ------------------------------------------------------------------ estimator bench


@dataclass
class BenchResult:
    estimator: str
    n: int
    t: float
    reps: int
    mse: float
    se: float
    seed: int
    plug_mode: str
    failures: int = 0

    @property
    def complete(self):
        return self.failures == 0

    def as_row(self):
        return {"estimator": self.estimator, "n": self.n, "t": float(self.t), "reps": self.reps,
                "mse": self.mse, "se": self.se, "seed": self.seed, "plug_mode": self.plug_mode}


def _columns(estimators, plug_modes):
    cols = []
    for e in estimators:
        if e in LIMIT_KINDS:
            cols.extend((e, m) for m in plug_modes)
        else:
            cols.append((e, ""))
    return cols


def _bench_chunk(task):
    """Squared errors of every (estimator, plug) column for replications ``lo..hi-1``."""
    seed, n, t, alpha, s0, lo, hi, cols = task
    mu = t / n ** 0.25
    params = ModelParams.constant_mean(alpha, n, s0, mu)
    ys = np.empty(hi - lo)
    zs = np.empty(hi - lo)
    for k, r in enumerate(range(lo, hi)):
        st = suff_stats(generate_dataset(params, seed, r))
        ys[k], zs[k] = st.y_bar_sq, st.z_bar_sq
    n1, n2 = params.n1, params.n2
    out = {}
    pairs = {}
    for est, mode in cols:
        try:
            if est in LIMIT_KINDS:
                if mode not in pairs:
                    pairs[mode] = batch_limit_pair(n1, n2, ys, zs, mode, s0, mu * mu)
                vals = pairs[mode][0 if est == "map_limit" else 1]
            else:
                vals = batch_estimates(est, n1, n2, ys, zs)
        except SeqvarError as exc:
            log.warning("bench %s/%s n=%d t=%g reps %d-%d failed: %s", est, mode, n, t, lo, hi, exc)
            vals = np.full(hi - lo, np.nan)
        out[(est, mode)] = (vals - s0) ** 2
    return out


def run_table1_bench(cfg: Config, workers=1):
    b = cfg.bench
    cols = _columns(b.estimators, b.plug_mode)
    cells = [(n, t) for n in b.n_values for t in b.t_values]
    tasks = [(b.seed, n, t, cfg.model.alpha, cfg.model.sigma0_sq, lo, hi, cols)
             for n, t in cells for lo, hi in engine.chunks(b.reps, b.chunk_size)]
    parts = engine.ordered_map(_bench_chunk, tasks, workers)
    per_cell = len(engine.chunks(b.reps, b.chunk_size))
    results = []
    for est, mode in cols:
        for ci, (n, t) in enumerate(cells):
            sq = np.concatenate([p[(est, mode)] for p in parts[ci * per_cell:(ci + 1) * per_cell]])
            ok = np.isfinite(sq)
            fails = int(sq.size - ok.sum())
            if fails:
                log.warning("cell %s/%s n=%d t=%g incomplete: %d failed replications", est, mode, n, t, fails)
            good = sq[ok]
            reps = int(good.size)
            mse = float(good.mean()) if reps else math.nan
            se = float(good.std(ddof=1) / math.sqrt(reps)) if reps >= 2 else math.nan
            results.append(BenchResult(est, int(n), float(t), reps, mse, se, b.seed, mode, fails))
    return results


# ------------------------------------------------------------------ shared helpers


def _dataset(alpha, n, s0, mu, seed, rep):
    return generate_dataset(ModelParams.constant_mean(alpha, n, s0, mu), seed, rep)


def _summary(values):
    a = np.asarray(values, dtype=float)
    a = a[np.isfinite(a)]
    if a.size == 0:
        return math.nan, math.nan
    return float(np.median(a)), float(a.mean())


# ------------------------------------------------------------------ posterior vs limit TV


def _bvm_rep(task):
    cfg, n, mu, rep = task
    alpha, s0 = cfg.model.alpha, cfg.model.sigma0_sq
    try:
        st = suff_stats(_dataset(alpha, n, s0, mu, cfg.bvm.seed, rep))
        pg = P.posterior_grid_mixture(st, cfg.hyperprior(), cfg.variance_prior())
        lp = L.LimitParams.oracle(st, s0, mu * mu)
        tv = P.tv_distance(pg, L.limit_grid(lp, pg.grid))
        tvg = P.tv_distance(pg, L.limit_grid(lp, pg.grid, gaussian_only=True))
        return tv, tvg
    except NumericalError as exc:
        log.warning("bvm n=%d mu=%g rep=%d failed: %s", n, mu, rep, exc)
        return math.nan, math.nan


def run_bvm_experiment(cfg: Config, workers=1):
    """Median and mean TV between the mixture posterior and both limit densities."""
    s = cfg.bvm
    settings = [(n, s.mu) for n in s.n_values]
    if s.mu_large != s.mu or s.n_large not in s.n_values:
        settings.append((s.n_large, s.mu_large))
    tasks = [(cfg, n, mu, r) for n, mu in settings for r in range(s.reps)]
    res = engine.ordered_map(_bvm_rep, tasks, workers)
    rows = []
    for k, (n, mu) in enumerate(settings):
        chunk = res[k * s.reps:(k + 1) * s.reps]
        tv = [a for a, _ in chunk]
        tvg = [b for _, b in chunk]
        med, mean = _summary(tv)
        medg, meang = _summary(tvg)
        rows.append({"n": n, "mu": float(mu), "reps": s.reps, "median_tv_limit": med, "mean_tv_limit": mean,
                     "median_tv_gauss": medg, "mean_tv_gauss": meang,
                     "failures": int(np.sum(~np.isfinite(tv)))})
    return rows


BVM_HEADER = ["n", "mu", "reps", "median_tv_limit", "mean_tv_limit", "median_tv_gauss", "mean_tv_gauss", "failures"]


# ------------------------------------------------------------------ i.i.d.-prior inconsistency


def log_proof_q_bound(alpha):
    """Log of the sufficient tail bound on Q from the inconsistency proof; far below any practical Q."""
    return -48.0 * (17.0 + 2.0 * math.e ** 2 + 24.0 / (1.0 - alpha))


def inconsistency_level(nu: MeanPrior, sigma0_sq, fallback_mu):
    """``(Q, R, mu0, r_infinite)`` with ``R = sigma0/sqrt(6) * sqrt(log(1/Q))`` and ``mu0 = R/2``."""
    s0 = math.sqrt(sigma0_sq)
    q = tail_ratio_Q(nu, s0)
    if not q > 0:
        return q, math.inf, float(fallback_mu), True
    r = s0 / math.sqrt(6.0) * math.sqrt(max(math.log(1.0 / q), 0.0))
    return q, r, r / 2.0, False


def _inconsistency_rep(task):
    cfg, nu, mu, n, rep = task
    s = cfg.inconsistency
    s0 = s.sigma0_sq
    pi = cfg.variance_prior()
    try:
        d = _dataset(cfg.model.alpha, n, s0, mu, s.seed, rep)
        pg = P.posterior_grid_iid(d, nu, pi)
        mass = P.interval_mass(pg, 0.5 * s0, 1.5 * s0)
        grid = np.linspace(0.5 * s0, 2.0 * s0, s.score_points)
        sc = np.asarray(P.score(grid, d, nu)) + np.array([P._dlog_prior(pi, g) for g in grid])
        return mass, float(sc.min()) / (n / s0)
    except NumericalError as exc:
        log.warning("inconsistency n=%d rep=%d failed: %s", n, rep, exc)
        return math.nan, math.nan


INCONSISTENCY_HEADER = ["run", "nu", "sigma0_sq", "mu0", "n", "reps", "mean_mass", "min_score_ratio",
                        "Q", "R", "R_infinite", "log_proof_Q_bound", "failures"]


def run_inconsistency_experiment(cfg: Config, workers=1):
    """Posterior mass near sigma0^2 under a proper i.i.d. prior, with contrasts.

    Runs ``theorem`` (means at R/2), ``improper`` (uniform prior, same data)
    and ``fallback`` (means at the configured level). ``min_score_ratio`` is
    the minimum of score plus prior derivative over [s0/2, 2 s0], divided by
    n/s0.
    """
    s = cfg.inconsistency
    nu = cfg.mean_prior()
    if not nu.proper:
        raise SeqvarError("the inconsistency experiment needs a proper mean prior")
    q, r, mu0, rinf = inconsistency_level(nu, s.sigma0_sq, s.fallback_mu)
    runs = [("theorem", nu, mu0), ("improper", MeanPrior.uniform_improper(), mu0)]
    if not rinf:
        runs.append(("fallback", nu, float(s.fallback_mu)))
    settings = [(name, prior, mu, n) for name, prior, mu in runs for n in s.n_values]
    tasks = [(cfg, prior, mu, n, rep) for _, prior, mu, n in settings for rep in range(s.reps)]
    res = engine.ordered_map(_inconsistency_rep, tasks, workers)
    rows = []
    for k, (name, prior, mu, n) in enumerate(settings):
        chunk = res[k * s.reps:(k + 1) * s.reps]
        mass = np.array([a for a, _ in chunk])
        ratio = np.array([b for _, b in chunk])
        ok = np.isfinite(mass)
        rows.append({"run": name, "nu": prior.family, "sigma0_sq": float(s.sigma0_sq), "mu0": float(mu), "n": n,
                     "reps": int(ok.sum()), "mean_mass": float(mass[ok].mean()) if ok.any() else math.nan,
                     "min_score_ratio": float(ratio[ok].mean()) if ok.any() else math.nan,
                     "Q": float(q), "R": float(r), "R_infinite": rinf,
                     "log_proof_Q_bound": log_proof_q_bound(cfg.model.alpha), "failures": int((~ok).sum())})
    return rows


# ------------------------------------------------------------------ contraction


def outside_mass(pg, center, radius):
    """Mass of ``|x/center - 1| >= radius``, summed from both tails to avoid cancellation."""
    lo, hi = center * (1.0 - radius), center * (1.0 + radius)
    left = P.interval_mass(pg, pg.grid[0], lo) if lo > pg.grid[0] else 0.0
    right = P.interval_mass(pg, hi, pg.grid[-1]) if hi < pg.grid[-1] else 0.0
    return left + right


def _contraction_rep(task):
    cfg, n, rep = task
    s = cfg.contraction
    s0 = cfg.model.sigma0_sq
    try:
        st = suff_stats(_dataset(cfg.model.alpha, n, s0, s.mu, s.seed, rep))
        pg = P.posterior_grid_mixture(st, cfg.hyperprior(), cfg.variance_prior())
        return outside_mass(pg, s0, s.M * math.sqrt(math.log(n) / n))
    except NumericalError as exc:
        log.warning("contraction n=%d rep=%d failed: %s", n, rep, exc)
        return math.nan


CONTRACTION_HEADER = ["n", "M", "radius", "reps", "mean_mass_outside", "max_mass_outside", "failures"]


def run_contraction_experiment(cfg: Config, workers=1):
    s = cfg.contraction
    tasks = [(cfg, n, r) for n in s.n_values for r in range(s.reps)]
    res = np.array(engine.ordered_map(_contraction_rep, tasks, workers))
    rows = []
    for k, n in enumerate(s.n_values):
        m = res[k * s.reps:(k + 1) * s.reps]
        ok = np.isfinite(m)
        rows.append({"n": n, "M": float(s.M), "radius": s.M * math.sqrt(math.log(n) / n), "reps": int(ok.sum()),
                     "mean_mass_outside": float(m[ok].mean()) if ok.any() else math.nan,
                     "max_mass_outside": float(m[ok].max()) if ok.any() else math.nan,
                     "failures": int((~ok).sum())})
    return rows


# ------------------------------------------------------------------ Gaussian-prior stationary point


def gaussian_stationary_point(n1, n2, y_bar_sq, z_bar_sq, theta_sq):
    """Root of ``s - Ybar^2 = (n2/n1) (s/(theta^2+s))^2 (Zbar^2 - theta^2 - s)``.

    Returns ``(sigma_hat_sq, converged)``.
    """
    def g(s):
        return s - y_bar_sq - (n2 / n1) * (s / (theta_sq + s)) ** 2 * (z_bar_sq - theta_sq - s)

    g0 = g(y_bar_sq)
    if g0 == 0.0:
        return float(y_bar_sq), True
    if g0 < 0.0:
        a, b = y_bar_sq, max(z_bar_sq - theta_sq, y_bar_sq)
    else:
        a, b = 1e-300, y_bar_sq
    if not g(a) * g(b) < 0.0:
        return math.nan, False
    try:
        root, info = brentq(g, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500, full_output=True)
    except (RuntimeError, ValueError):
        return math.nan, False
    return float(root), bool(info.converged)


BIAS_HEADER = ["theta_sq", "mu_bar_sq", "sigma_hat_sq", "bias", "sign_ok", "converged"]


def run_gaussian_bias_sweep(cfg: Config, workers=1):
    s = cfg.bias_sweep
    s0 = cfg.model.sigma0_sq
    n1, n2 = split_sizes(s.n, cfg.model.alpha)
    rows = []
    for th in s.theta_sq_values:
        for mb in s.mu_bar_sq_values:
            est, conv = gaussian_stationary_point(n1, n2, s0, s0 + mb, th)
            bias = est - s0
            sign_ok = bool(conv and np.sign(bias) == np.sign(mb - th))
            if not conv:
                log.warning("bias sweep theta^2=%g mu^2=%g: root finder failed", th, mb)
            rows.append({"theta_sq": float(th), "mu_bar_sq": float(mb), "sigma_hat_sq": est, "bias": bias,
                         "sign_ok": sign_ok, "converged": conv})
    return rows
