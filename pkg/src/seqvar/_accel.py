"""Backend switch for the compiled kernels.

Set ``SEQVAR_DISABLE_NUMBA=1`` in the environment before import to run every
hot kernel through its pure-numpy implementation instead of numba.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}

NUMBA_REQUESTED = os.environ.get("SEQVAR_DISABLE_NUMBA", "").strip().lower() in _FALSY

try:
    if not NUMBA_REQUESTED:
        raise ImportError("numba disabled by SEQVAR_DISABLE_NUMBA")
    from numba import njit as _njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False
    _njit = None


def njit(*args, **kwargs):
    """``numba.njit`` when numba is enabled, otherwise an identity decorator."""
    if NUMBA_ENABLED:
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def decorator(fn):
        return fn

    return decorator


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"
