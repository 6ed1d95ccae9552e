"""Kernel dispatch: numba-compiled loops by default, numpy fallback on demand."""

from ._numba_support import NUMBA_ENABLED

if NUMBA_ENABLED:
    from . import _kernels_numba as impl
else:
    from . import _kernels_numpy as impl

BACKEND = "numba" if NUMBA_ENABLED else "numpy"

fld_pass = impl.fld_pass
cda_pass = impl.cda_pass
bake_dsm = impl.bake_dsm
render_channel = impl.render_channel
