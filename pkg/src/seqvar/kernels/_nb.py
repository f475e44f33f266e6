"""Compiled loop kernels. Signatures mirror ``_np`` one to one."""

import math

import numpy as np
from numba import njit

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
LOG_PI = math.log(math.pi)
SQRT2 = math.sqrt(2.0)
KERNEL_PANELS = 16
PRIOR_PANELS = 24


@njit(cache=True)
def log_sf_scalar(x):
    """log(1 - Phi(x)); erfc in the bulk, asymptotic series in the far tail."""
    if x < 0.0:
        return math.log1p(-0.5 * math.erfc(-x / SQRT2))
    if x < 30.0:
        return math.log(0.5 * math.erfc(x / SQRT2))
    inv = 1.0 / (x * x)
    term = 1.0
    acc = 1.0
    for k in range(1, 13):
        term *= -(2.0 * k - 1.0) * inv
        acc += term
    return -0.5 * x * x - LOG_SQRT_2PI - math.log(x) + math.log(acc)


@njit(cache=True)
def log_sf(x):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = log_sf_scalar(x[i])
    return out


@njit(cache=True)
def prior_const(fam, par):
    if fam == 0:
        return -0.5 * math.log(2.0 * math.pi * par)
    if fam == 1:
        return -LOG_PI - math.log(par)
    return -math.log(2.0 * par)


@njit(cache=True)
def mean_prior_log(mu, fam, par, c0):
    if fam == 0:
        return c0 - 0.5 * mu * mu / par
    if fam == 1:
        u = mu / par
        return c0 - math.log1p(u * u)
    return c0 - abs(mu) / par


@njit(cache=True)
def _gh_rule(z, sig, fam, par, c0, gx, lgw):
    # nodes recentred at z with scale sig*sqrt(2)
    c = sig * SQRT2
    m = -np.inf
    s = 0.0
    t = 0.0
    for k in range(gx.shape[0]):
        l = lgw[k] + mean_prior_log(z + c * gx[k], fam, par, c0)
        d2 = 2.0 * sig * sig * gx[k] * gx[k]
        if l > m:
            r = math.exp(m - l) if m > -np.inf else 0.0
            s = s * r + 1.0
            t = t * r + d2
            m = l
        else:
            e = math.exp(l - m)
            s += e
            t += e * d2
    return math.log(c) + m + math.log(s), t / s


@njit(cache=True)
def _composite(z, sig, fam, par, c0, scale, n_gap, lx, llw):
    nk = KERNEL_PANELS + 1
    npr = PRIOR_PANELS + 1
    bp = np.empty(nk + npr + n_gap + 1)
    for j in range(nk):
        bp[j] = z - 12.0 * sig + 24.0 * sig * j / (nk - 1)
    for j in range(npr):
        bp[nk + j] = -12.0 * scale + 24.0 * scale * j / (npr - 1)
    lo_hi = min(z + 12.0 * sig, 12.0 * scale)
    hi_lo = max(z - 12.0 * sig, -12.0 * scale)
    if hi_lo <= lo_hi:
        hi_lo = lo_hi
    for j in range(n_gap + 1):
        bp[nk + npr + j] = lo_hi + (hi_lo - lo_hi) * j / max(n_gap, 1)
    bp = np.sort(bp)
    inv2s2 = 0.5 / (sig * sig)
    m = -np.inf
    s = 0.0
    t = 0.0
    for p in range(bp.shape[0] - 1):
        a = bp[p]
        b = bp[p + 1]
        if b <= a:
            continue
        half = 0.5 * (b - a)
        lh = math.log(half)
        mid = 0.5 * (a + b)
        for k in range(lx.shape[0]):
            mu = mid + half * lx[k]
            d2 = (z - mu) * (z - mu)
            l = lh + llw[k] - d2 * inv2s2 + mean_prior_log(mu, fam, par, c0)
            if l > m:
                r = math.exp(m - l) if m > -np.inf else 0.0
                s = s * r + 1.0
                t = t * r + d2
                m = l
            else:
                e = math.exp(l - m)
                s += e
                t += e * d2
    return m + math.log(s), t / s


@njit(cache=True)
def mean_integrals(z, sig2, fam, par, scale, n_gap, gx1, gw1, gx2, gw2, lx, lw, tol):
    """Per-coordinate log of int exp(-(z-mu)^2/2s) dnu(mu) and the posterior spread."""
    nz = z.shape[0]
    logi = np.empty(nz)
    v = np.empty(nz)
    fb = np.zeros(nz, dtype=np.int8)
    sig = math.sqrt(sig2)
    c0 = prior_const(fam, par)
    lgw1 = np.log(gw1)
    lgw2 = np.log(gw2)
    llw = np.log(lw)
    for i in range(nz):
        l1, v1 = _gh_rule(z[i], sig, fam, par, c0, gx1, lgw1)
        l2, v2 = _gh_rule(z[i], sig, fam, par, c0, gx2, lgw2)
        if abs(l1 - l2) <= tol and abs(v1 - v2) <= 10.0 * tol * v1:
            logi[i] = l1
            v[i] = v1
        else:
            logi[i], v[i] = _composite(z[i], sig, fam, par, c0, scale, n_gap, lx, llw)
            fb[i] = 1
    return logi, v, fb


@njit(cache=True)
def hyper_log(x, gcode, p1, p2):
    if gcode == 0:
        return p1 * math.log(p2) - math.lgamma(p1) - (p1 + 1.0) * math.log(x) - p2 / x
    if gcode == 1:
        lx = math.log(x)
        return -lx - math.log(p2) - LOG_SQRT_2PI - 0.5 * ((lx - p1) / p2) ** 2
    if gcode == 2:
        return math.log(p1) - p1 * x
    return 0.0


@njit(cache=True)
def _theta_panels(bp, levels, s2, a2, b2, c2, gcode, p1, p2, lx, lw):
    m = -np.inf
    s = 0.0
    for p in range(bp.shape[0] - 1):
        a = bp[p]
        b = bp[p + 1]
        if b <= a:
            continue
        w = (b - a) / levels
        for q in range(levels):
            lo = a + q * w
            half = 0.5 * w
            mid = lo + half
            for k in range(lx.shape[0]):
                th = mid + half * lx[k]
                x = s2 + th
                l = math.log(half * lw[k]) + c2 - (a2 + 1.0) * math.log(x) - b2 / x + hyper_log(th, gcode, p1, p2)
                if l > m:
                    s = s * math.exp(m - l) + 1.0 if m > -np.inf else 1.0
                    m = l
                else:
                    s += math.exp(l - m)
    if m == -np.inf:
        return m
    return m + math.log(s)


@njit(cache=True)
def theta_log_integral(sig2, a2, b2, gcode, p1, p2, gmode, gsd, theta_max, lx, lw, rtol, max_levels):
    """log int_0^theta_max f_IG(a2,b2)(s+t) gamma(t) dt for each s in sig2."""
    ns = sig2.shape[0]
    out = np.empty(ns)
    status = np.zeros(ns, dtype=np.int8)
    c2 = a2 * math.log(b2) - math.lgamma(a2)
    mode_x = b2 / (a2 + 1.0)
    h = mode_x / math.sqrt(a2 + 1.0)
    nf = 41
    nb = 49
    bp = np.empty(3 * nf + nb)
    for i in range(ns):
        s2 = sig2[i]
        c = min(max(mode_x - s2, 0.0), theta_max)
        for j in range(nf):
            u = -20.0 + 40.0 * j / (nf - 1)
            bp[j] = min(max(c + u * h, 0.0), theta_max)
            if gsd > 0.0:
                bp[nf + j] = min(max(gmode + u * gsd, 0.0), theta_max)
            else:
                bp[nf + j] = 0.0
            # geometric window in x covers the heavy right tail at small shapes
            bp[2 * nf + j] = min(max(mode_x * 2.0 ** (u / 4.0) - s2, 0.0), theta_max)
        for j in range(nb):
            bp[3 * nf + j] = theta_max * (j / (nb - 1.0)) ** 2
        sbp = np.sort(bp)
        prev = _theta_panels(sbp, 1, s2, a2, b2, c2, gcode, p1, p2, lx, lw)
        ok = False
        lev = 2
        while lev <= max_levels:
            cur = _theta_panels(sbp, lev, s2, a2, b2, c2, gcode, p1, p2, lx, lw)
            if abs(cur - prev) <= rtol:
                ok = True
                prev = cur
                break
            prev = cur
            lev *= 2
        out[i] = prev
        if not ok:
            status[i] = 1
    return out, status


@njit(cache=True)
def limit_log(x, yb, zb, n1, n2, s0, mb):
    if x < 0.0:
        return -np.inf
    g = -(n1 / (4.0 * s0 * s0)) * (x - yb) ** 2
    arg = math.sqrt(n2) * (x - zb) / (SQRT2 * (s0 + mb))
    return g + log_sf_scalar(arg)


@njit(cache=True)
def limit_logpdf(x, yb, zb, n1, n2, s0, mb):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = limit_log(x[i], yb, zb, n1, n2, s0, mb)
    return out


INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@njit(cache=True)
def _map_one(yb, zb, n1, n2, s0, mb, ngrid, rtol):
    top = 2.0 * max(yb, zb)
    best = -np.inf
    ib = 0
    for j in range(ngrid):
        v = limit_log(top * j / (ngrid - 1.0), yb, zb, n1, n2, s0, mb)
        if v > best:
            best = v
            ib = j
    a = top * max(ib - 1, 0) / (ngrid - 1.0)
    b = top * min(ib + 1, ngrid - 1) / (ngrid - 1.0)
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc = limit_log(c, yb, zb, n1, n2, s0, mb)
    fd = limit_log(d, yb, zb, n1, n2, s0, mb)
    for _ in range(200):
        if b - a <= rtol * max(abs(a + b) * 0.5, 1e-300):
            break
        if fc >= fd:
            b = d
            d = c
            fd = fc
            c = b - INVPHI * (b - a)
            fc = limit_log(c, yb, zb, n1, n2, s0, mb)
        else:
            a = c
            c = d
            fc = fd
            d = a + INVPHI * (b - a)
            fd = limit_log(d, yb, zb, n1, n2, s0, mb)
    return 0.5 * (a + b)


@njit(cache=True)
def limit_map_batch(yb, zb, n1, n2, s0, mb, ngrid, rtol):
    out = np.empty(yb.shape[0])
    for r in range(yb.shape[0]):
        out[r] = _map_one(yb[r], zb[r], n1, n2, s0[r], mb[r], ngrid, rtol)
    return out


@njit(cache=True)
def _edge(m, fm, step, sign, drop, yb, zb, n1, n2, s0, mb):
    # walk away from the mode until the log density has fallen by `drop`
    lo = m
    hi = m
    for _ in range(200):
        hi = m + sign * step
        if sign < 0 and hi <= 0.0:
            return 0.0
        if limit_log(hi, yb, zb, n1, n2, s0, mb) < fm - drop:
            break
        lo = hi
        step *= 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if limit_log(mid, yb, zb, n1, n2, s0, mb) < fm - drop:
            hi = mid
        else:
            lo = mid
    return hi


@njit(cache=True)
def limit_mean_batch(yb, zb, n1, n2, s0, mb, modes, npanel, lx, lw):
    out = np.empty(yb.shape[0])
    for r in range(yb.shape[0]):
        m = modes[r]
        fm = limit_log(m, yb[r], zb[r], n1, n2, s0[r], mb[r])
        step = 1e-3 * min(s0[r] * math.sqrt(2.0 / n1), (s0[r] + mb[r]) * math.sqrt(2.0 / n2))
        left = _edge(m, fm, step, -1.0, 46.0, yb[r], zb[r], n1, n2, s0[r], mb[r])
        right = _edge(m, fm, step, 1.0, 46.0, yb[r], zb[r], n1, n2, s0[r], mb[r])
        w = (right - left) / npanel
        s0w = 0.0
        s1w = 0.0
        for p in range(npanel):
            half = 0.5 * w
            mid = left + p * w + half
            for k in range(lx.shape[0]):
                x = mid + half * lx[k]
                e = half * lw[k] * math.exp(limit_log(x, yb[r], zb[r], n1, n2, s0[r], mb[r]) - fm)
                s0w += e
                s1w += e * x
        out[r] = s1w / s0w
    return out
