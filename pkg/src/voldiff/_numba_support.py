"""Numba detection and the env-flag switch for the pure-numpy fallback.

Set ``VOLDIFF_DISABLE_NUMBA=1`` to force the numpy code paths even when
numba is installed.  The flag is read once at import time.
"""

import os

_DISABLED = os.environ.get("VOLDIFF_DISABLE_NUMBA", "").strip() not in ("", "0", "false")

try:
    if _DISABLED:
        raise ImportError("numba disabled via VOLDIFF_DISABLE_NUMBA")
    import numba

    NUMBA_ENABLED = True
    prange = numba.prange
except ImportError:
    numba = None
    NUMBA_ENABLED = False
    prange = range


def maybe_njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity decorator otherwise.

    Used for Monte Carlo kernels whose scalar control flow has no natural
    vectorized form; the grid kernels instead have hand-written numpy
    twins in ``_kernels_numpy``.
    """
    if NUMBA_ENABLED:
        return numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]

    def deco(fn):
        return fn

    return deco


def set_num_threads(n):
    if NUMBA_ENABLED and n:
        numba.set_num_threads(int(n))
