"""Backend dispatch for the hot quadrature kernels.

The numba and numpy implementations share signatures; which one runs is
fixed at import time by ``SEQVAR_DISABLE_NUMBA`` (see ``seqvar._accel``).
Wrappers here own the quadrature constants and the error reporting.
"""

import math

import numpy as np

from .._accel import NUMBA_ENABLED
from ..errors import DomainError, NumericalError, UsageError
from . import _np

if NUMBA_ENABLED:
    from . import _nb as _impl
else:
    _impl = _np

BACKEND = "numba" if NUMBA_ENABLED else "numpy"

# mean-prior family codes understood by the kernels
FAM_GAUSSIAN, FAM_CAUCHY, FAM_LAPLACE = 0, 1, 2
# positive-density family codes for the hyperprior
POS_INV_GAMMA, POS_LOG_NORMAL, POS_EXPONENTIAL, POS_FLAT = 0, 1, 2, 3

GH_NODES = 101
GH_CHECK_NODES = 67
GL_NODES = 8
GH_TOL = 1e-9
THETA_RTOL = 1e-9
THETA_TAIL_RTOL = 1e-12
THETA_MAX_LEVELS = 16
MAP_GRID = 1024
MAP_RTOL = 1e-10
MEAN_PANELS = 64
MAX_GAP_PANELS = 2048

_GX1, _GW1 = np.polynomial.hermite.hermgauss(GH_NODES)
_GX2, _GW2 = np.polynomial.hermite.hermgauss(GH_CHECK_NODES)
_LX, _LW = np.polynomial.legendre.leggauss(GL_NODES)


def gauss_legendre():
    return _LX.copy(), _LW.copy()


def log_sf(x):
    """log(1 - Phi(x)) elementwise for a 1-d float array."""
    return _impl.log_sf(np.ascontiguousarray(x, dtype=float))


def _gap_panels(z, sig, scale):
    gap = np.maximum(np.abs(z) - 12.0 * sig - 12.0 * scale, 0.0).max(initial=0.0)
    if gap <= 0.0:
        return 0
    return int(min(max(math.ceil(gap / (0.5 * min(sig, scale))), 8), MAX_GAP_PANELS))


def mean_integrals(z, sig2, fam, par, scale):
    """Per-coordinate ``log I_i`` and ``V_i`` for a proper continuous mean prior.

    ``I_i = int exp(-(z_i - mu)^2 / (2 sig2)) nu(mu) dmu`` and ``V_i`` is the
    posterior mean of ``(z_i - mu)^2``. Returns ``(log_i, v, used_fallback)``.
    """
    z = np.ascontiguousarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise DomainError(f"non-finite observation at coordinate {int(np.flatnonzero(~np.isfinite(z))[0])}")
    if not sig2 > 0:
        raise DomainError("sigma^2 must be positive")
    sig = math.sqrt(sig2)
    n_gap = _gap_panels(z, sig, scale)
    logi, v, fb = _impl.mean_integrals(z, float(sig2), int(fam), float(par), float(scale), n_gap,
                                       _GX1, _GW1, _GX2, _GW2, _LX, _LW, GH_TOL)
    bad = np.flatnonzero(~(np.isfinite(logi) & np.isfinite(v)))
    if bad.size:
        raise NumericalError(f"mean integral failed at coordinate {bad[0]}", index=int(bad[0]))
    return logi, v, fb


def theta_log_integral(sig2, a2, b2, gcode, p1, p2, gmode, gsd, gscale, log_sup_beyond):
    """``log int_0^inf f_IG(a2, b2)(s + t) gamma(t) dt`` on an array of ``s``.

    The upper limit starts at ``20 * max(mode, gscale)``. Rows whose tail bound
    ``sup_{t > T} gamma(t) * P(IG > s + T)`` is not yet below the relative
    target are recomputed with ``T`` doubled. ``log_sup_beyond(T)`` supplies
    the log of that supremum.
    """
    sig2 = np.ascontiguousarray(sig2, dtype=float)
    mode_x = b2 / (a2 + 1.0)
    theta_max = 20.0 * max(mode_x, gscale)
    lgam = math.lgamma(a2 + 1.0)
    out = np.empty(sig2.shape)
    todo = np.arange(sig2.size)
    for _ in range(64):
        sub = sig2[todo]
        res, status = _impl.theta_log_integral(sub, float(a2), float(b2), int(gcode), float(p1), float(p2),
                                               float(gmode), float(gsd), float(theta_max), _LX, _LW,
                                               THETA_RTOL, THETA_MAX_LEVELS)
        bad = np.flatnonzero(status != 0)
        if bad.size:
            idx = int(todo[bad[0]])
            raise NumericalError(f"theta integral did not converge at grid index {idx}", index=idx)
        out[todo] = res
        tail = log_sup_beyond(theta_max) + a2 * np.log(b2 / (sub + theta_max)) - lgam
        open_rows = tail - res > math.log(THETA_TAIL_RTOL)
        if not open_rows.any():
            return out
        todo = todo[open_rows]
        theta_max *= 2.0
    raise NumericalError("theta integral tail did not close", index=int(todo[0]))


def limit_logpdf(x, yb, zb, n1, n2, s0, mb):
    return _impl.limit_logpdf(np.ascontiguousarray(x, dtype=float), float(yb), float(zb),
                              float(n1), float(n2), float(s0), float(mb))


def _rows(*arrays):
    """1-D float rows; scalar plug values are broadcast to the number of rows."""
    arrs = np.broadcast_arrays(*[np.atleast_1d(np.asarray(a, dtype=float)) for a in arrays])
    if arrs[0].ndim != 1:
        raise UsageError("batch limit kernels take 1-D statistics")
    return [np.ascontiguousarray(a) for a in arrs]


def limit_map_batch(yb, zb, n1, n2, s0, mb):
    yb, zb, s0, mb = _rows(yb, zb, s0, mb)
    return _impl.limit_map_batch(yb, zb, float(n1), float(n2), s0, mb, MAP_GRID, MAP_RTOL)


def limit_mean_batch(yb, zb, n1, n2, s0, mb, modes=None):
    yb, zb, s0, mb = _rows(yb, zb, s0, mb)
    if modes is None:
        modes = limit_map_batch(yb, zb, n1, n2, s0, mb)
    modes = np.ascontiguousarray(modes, dtype=float)
    return _impl.limit_mean_batch(yb, zb, float(n1), float(n2), s0, mb, modes, MEAN_PANELS, _LX, _LW)
