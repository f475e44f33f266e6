"""Vectorized numpy kernels. Same signatures and numerics as ``_nb``."""

import math

import numpy as np
from scipy import special

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
LOG_PI = math.log(math.pi)
SQRT2 = math.sqrt(2.0)
KERNEL_PANELS = 16
PRIOR_PANELS = 24
INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def log_sf(x):
    return special.log_ndtr(-np.asarray(x, dtype=float))


def mean_prior_log(mu, fam, par):
    if fam == 0:
        return -0.5 * math.log(2.0 * math.pi * par) - 0.5 * mu * mu / par
    if fam == 1:
        return -LOG_PI - math.log(par) - np.log1p((mu / par) ** 2)
    return -math.log(2.0 * par) - np.abs(mu) / par


def _weighted_lse(logw, d2):
    # row-wise log-sum-exp plus the matching weighted mean of d2
    m = logw.max(axis=1, keepdims=True)
    e = np.exp(logw - m)
    s = e.sum(axis=1)
    return m[:, 0] + np.log(s), (e * d2).sum(axis=1) / s


def _gh_rule(z, sig, fam, par, gx, gw):
    c = sig * SQRT2
    logw = np.log(gw)[None, :] + mean_prior_log(z[:, None] + c * gx[None, :], fam, par)
    d2 = np.broadcast_to(2.0 * sig * sig * gx * gx, logw.shape)
    lse, v = _weighted_lse(logw, d2)
    return math.log(c) + lse, v


def _composite(z, sig, fam, par, scale, n_gap, lx, lw):
    kern = z[:, None] + sig * np.linspace(-12.0, 12.0, KERNEL_PANELS + 1)[None, :]
    prior = np.broadcast_to(scale * np.linspace(-12.0, 12.0, PRIOR_PANELS + 1)[None, :], (z.size, PRIOR_PANELS + 1))
    lo_hi = np.minimum(z + 12.0 * sig, 12.0 * scale)
    hi_lo = np.maximum(z - 12.0 * sig, -12.0 * scale)
    hi_lo = np.where(hi_lo <= lo_hi, lo_hi, hi_lo)
    frac = np.arange(n_gap + 1) / max(n_gap, 1)
    gap = lo_hi[:, None] + (hi_lo - lo_hi)[:, None] * frac[None, :]
    bp = np.sort(np.concatenate([kern, prior, gap], axis=1), axis=1)
    a = bp[:, :-1]
    b = bp[:, 1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    mu = mid[:, :, None] + half[:, :, None] * lx[None, None, :]
    d2 = (z[:, None, None] - mu) ** 2
    with np.errstate(divide="ignore"):
        lh = np.log(half[:, :, None] * lw[None, None, :])
    logw = lh - 0.5 * d2 / (sig * sig) + mean_prior_log(mu, fam, par)
    nz = z.shape[0]
    return _weighted_lse(logw.reshape(nz, -1), d2.reshape(nz, -1))


def mean_integrals(z, sig2, fam, par, scale, n_gap, gx1, gw1, gx2, gw2, lx, lw, tol):
    """Per-coordinate log of int exp(-(z-mu)^2/2s) dnu(mu) and the posterior spread."""
    sig = math.sqrt(sig2)
    l1, v1 = _gh_rule(z, sig, fam, par, gx1, gw1)
    l2, v2 = _gh_rule(z, sig, fam, par, gx2, gw2)
    good = (np.abs(l1 - l2) <= tol) & (np.abs(v1 - v2) <= 10.0 * tol * v1)
    logi = l1.copy()
    v = v1.copy()
    bad = np.flatnonzero(~good)
    if bad.size:
        # chunked so the node tensor stays small for long data vectors
        for start in range(0, bad.size, 512):
            idx = bad[start:start + 512]
            li, vi = _composite(z[idx], sig, fam, par, scale, n_gap, lx, lw)
            logi[idx] = li
            v[idx] = vi
    return logi, v, (~good).astype(np.int8)


def hyper_log(x, gcode, p1, p2):
    if gcode == 0:
        return p1 * math.log(p2) - math.lgamma(p1) - (p1 + 1.0) * np.log(x) - p2 / x
    if gcode == 1:
        lx_ = np.log(x)
        return -lx_ - math.log(p2) - LOG_SQRT_2PI - 0.5 * ((lx_ - p1) / p2) ** 2
    if gcode == 2:
        return math.log(p1) - p1 * x
    return np.zeros_like(x)


def _theta_panels(bp, levels, s2, a2, b2, c2, gcode, p1, p2, lx, lw):
    a = bp[:, :-1]
    w = (bp[:, 1:] - a) / levels
    q = np.arange(levels)
    lo = a[:, :, None] + q[None, None, :] * w[:, :, None]
    half = 0.5 * w[:, :, None, None]
    th = lo[:, :, :, None] + half + half * lx
    x = s2[:, None, None, None] + th
    with np.errstate(divide="ignore", invalid="ignore"):
        lh = np.log(half * lw)
        l = lh + c2 - (a2 + 1.0) * np.log(x) - b2 / x + hyper_log(np.where(th > 0, th, 1.0), gcode, p1, p2)
    l = np.where(np.broadcast_to(w[:, :, None, None] > 0, l.shape), l, -np.inf)
    l = l.reshape(l.shape[0], -1)
    m = l.max(axis=1)
    safe = np.where(np.isfinite(m), m, 0.0)
    return np.where(np.isfinite(m), safe + np.log(np.exp(l - safe[:, None]).sum(axis=1)), -np.inf)


def theta_log_integral(sig2, a2, b2, gcode, p1, p2, gmode, gsd, theta_max, lx, lw, rtol, max_levels):
    """log int_0^theta_max f_IG(a2,b2)(s+t) gamma(t) dt for each s in sig2."""
    c2 = a2 * math.log(b2) - math.lgamma(a2)
    mode_x = b2 / (a2 + 1.0)
    h = mode_x / math.sqrt(a2 + 1.0)
    u = np.linspace(-20.0, 20.0, 41)
    c = np.clip(mode_x - sig2, 0.0, theta_max)
    fine = np.clip(c[:, None] + u[None, :] * h, 0.0, theta_max)
    if gsd > 0.0:
        hyp = np.clip(gmode + u * gsd, 0.0, theta_max)
    else:
        hyp = np.zeros_like(u)
    geo = np.clip(mode_x * 2.0 ** (u[None, :] / 4.0) - sig2[:, None], 0.0, theta_max)
    back = theta_max * (np.arange(49) / 48.0) ** 2
    ns = sig2.shape[0]
    bp = np.concatenate([fine, np.broadcast_to(hyp, (ns, 41)), geo, np.broadcast_to(back, (ns, 49))], axis=1)
    bp = np.sort(bp, axis=1)
    out = np.empty(ns)
    status = np.ones(ns, dtype=np.int8)
    # evaluate in modest row blocks to bound memory
    for start in range(0, ns, 256):
        sl = slice(start, start + 256)
        prev = _theta_panels(bp[sl], 1, sig2[sl], a2, b2, c2, gcode, p1, p2, lx, lw)
        pending = np.ones(prev.shape[0], dtype=bool)
        lev = 2
        while lev <= max_levels and pending.any():
            cur = _theta_panels(bp[sl], lev, sig2[sl], a2, b2, c2, gcode, p1, p2, lx, lw)
            conv = pending & (np.abs(cur - prev) <= rtol)
            prev = np.where(pending, cur, prev)
            status[sl][conv] = 0
            pending &= ~conv
            lev *= 2
        out[sl] = prev
    return out, status


def limit_logpdf(x, yb, zb, n1, n2, s0, mb):
    x = np.asarray(x, dtype=float)
    g = -(n1 / (4.0 * s0 * s0)) * (x - yb) ** 2
    arg = math.sqrt(n2) * (x - zb) / (SQRT2 * (s0 + mb))
    return np.where(x < 0.0, -np.inf, g + special.log_ndtr(-arg))


def _limit_rows(x, yb, zb, n1, n2, s0, mb):
    g = -(n1 / (4.0 * s0 * s0)) * (x - yb) ** 2
    arg = math.sqrt(n2) * (x - zb) / (SQRT2 * (s0 + mb))
    return np.where(x < 0.0, -np.inf, g + special.log_ndtr(-arg))


def limit_map_batch(yb, zb, n1, n2, s0, mb, ngrid, rtol):
    top = 2.0 * np.maximum(yb, zb)
    frac = np.arange(ngrid) / (ngrid - 1.0)
    vals = _limit_rows(top[:, None] * frac[None, :], yb[:, None], zb[:, None], n1, n2, s0[:, None], mb[:, None])
    ib = np.argmax(vals, axis=1)
    a = top * np.maximum(ib - 1, 0) / (ngrid - 1.0)
    b = top * np.minimum(ib + 1, ngrid - 1) / (ngrid - 1.0)

    def f(x):
        return _limit_rows(x, yb, zb, n1, n2, s0, mb)

    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc = f(c)
    fd = f(d)
    for _ in range(200):
        live = (b - a) > rtol * np.maximum(np.abs(a + b) * 0.5, 1e-300)
        if not live.any():
            break
        left = live & (fc >= fd)
        right = live & ~(fc >= fd)
        nb_ = np.where(left, d, b)
        na = np.where(right, c, a)
        nc = np.where(left, nb_ - INVPHI * (nb_ - a), np.where(right, d, c))
        nd = np.where(left, c, np.where(right, na + INVPHI * (nb_ - na), d))
        nfc = np.where(left, f(nc), np.where(right, fd, fc))
        nfd = np.where(left, fc, np.where(right, f(nd), fd))
        a, b, c, d, fc, fd = na, nb_, nc, nd, nfc, nfd
    return 0.5 * (a + b)


def _edge(m, fm, step, sign, drop, yb, zb, n1, n2, s0, mb):
    lo = m.copy()
    hi = m.copy()
    found = np.zeros(m.shape, dtype=bool)
    zero = np.zeros(m.shape, dtype=bool)
    for _ in range(200):
        live = ~(found | zero)
        if not live.any():
            break
        cand = m + sign * step
        if sign < 0:
            hit0 = live & (cand <= 0.0)
            zero |= hit0
            live &= ~hit0
        below = _limit_rows(cand, yb, zb, n1, n2, s0, mb) < fm - drop
        hi = np.where(live, cand, hi)
        lo = np.where(live & ~below, cand, lo)
        found |= live & below
        step = np.where(live & ~below, step * 2.0, step)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        below = _limit_rows(mid, yb, zb, n1, n2, s0, mb) < fm - drop
        hi = np.where(below, mid, hi)
        lo = np.where(below, lo, mid)
    return np.where(zero, 0.0, hi)


def limit_mean_batch(yb, zb, n1, n2, s0, mb, modes, npanel, lx, lw):
    fm = _limit_rows(modes, yb, zb, n1, n2, s0, mb)
    step = 1e-3 * np.minimum(s0 * math.sqrt(2.0 / n1), (s0 + mb) * math.sqrt(2.0 / n2))
    left = _edge(modes, fm, step.copy(), -1.0, 46.0, yb, zb, n1, n2, s0, mb)
    right = _edge(modes, fm, step.copy(), 1.0, 46.0, yb, zb, n1, n2, s0, mb)
    w = (right - left) / npanel
    half = 0.5 * w
    mids = left[:, None] + (np.arange(npanel)[None, :] + 0.5) * w[:, None]
    x = mids[:, :, None] + half[:, None, None] * lx[None, None, :]
    col = (slice(None), None, None)
    lv = _limit_rows(x, yb[col], zb[col], n1, n2, s0[col], mb[col]) - fm[col]
    e = half[col] * lw[None, None, :] * np.exp(lv)
    return (e * x).sum(axis=(1, 2)) / e.sum(axis=(1, 2))
