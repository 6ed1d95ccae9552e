"""Flux limiters: the dimensionless factor F(R) in the diffusion coefficient.

All limiters satisfy F(0+) = 1/3 and R*F(R) -> 1 as R -> infinity, except
the classical constant limiter which is F = 1/3 for every R.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Integer codes shared with the compiled kernels.
CODE_CDA = 0
CODE_SUM = 1
CODE_MAX = 2
CODE_KERSHAW = 3
CODE_LARSEN = 4
CODE_LP = 5

_KIND_TO_CODE = {
    "cda": CODE_CDA,
    "sum": CODE_SUM,
    "max": CODE_MAX,
    "kershaw": CODE_KERSHAW,
    "larsen": CODE_LARSEN,
    "lp": CODE_LP,
}

# Below this argument the closed form of the Levermore-Pomraning limiter
# loses precision to cancellation (error ~ eps/R^2); switch to the Taylor
# series, whose truncation error ~ R^6/4725 crosses over near this point.
LP_TAYLOR_THRESHOLD = 5e-2


@dataclass(frozen=True)
class FluxLimiter:
    kind: str
    n: float = 2.0  # exponent of the larsen family, ignored otherwise

    def __post_init__(self):
        if self.kind not in _KIND_TO_CODE:
            raise ValueError(f"unknown flux limiter {self.kind!r}")
        if self.kind == "larsen" and not self.n >= 1:
            raise ValueError("larsen exponent must be >= 1")

    @property
    def code(self) -> int:
        return _KIND_TO_CODE[self.kind]

    @property
    def name(self) -> str:
        if self.kind == "larsen":
            n = self.n
            return f"larsen{n:g}"
        return self.kind

    @classmethod
    def from_name(cls, name: str) -> "FluxLimiter":
        name = name.strip().lower()
        if name.startswith("larsen"):
            suffix = name[len("larsen") :]
            return cls("larsen", float(suffix) if suffix else 2.0)
        return cls(name)


CDA = FluxLimiter("cda")
SUM = FluxLimiter("sum")
MAX = FluxLimiter("max")
KERSHAW = FluxLimiter("kershaw")
LARSEN2 = FluxLimiter("larsen", 2.0)
LEVERMORE_POMRANING = FluxLimiter("lp")

TABLE_LIMITERS = (SUM, MAX, KERSHAW, LARSEN2, LEVERMORE_POMRANING)


def _lp(r):
    small = r < LP_TAYLOR_THRESHOLD
    rs = np.where(small, 1.0, r)  # dummy argument to keep coth finite
    coth = 1.0 / np.tanh(rs)
    direct = (coth - 1.0 / rs) / rs
    r2 = r * r
    taylor = 1.0 / 3.0 - r2 / 45.0 + 2.0 * r2 * r2 / 945.0
    return np.where(small, taylor, direct)


def _larsen(r, n):
    # Factor out the dominant term so neither 3**n nor r**n can overflow.
    out = np.empty_like(r)
    lo = r <= 3.0
    out[lo] = (1.0 / 3.0) * (1.0 + (r[lo] / 3.0) ** n) ** (-1.0 / n)
    hi = ~lo
    out[hi] = (1.0 / r[hi]) * (1.0 + (3.0 / r[hi]) ** n) ** (-1.0 / n)
    return out


def evaluate_code(code: int, n: float, arr: np.ndarray) -> np.ndarray:
    """Unchecked array evaluation by integer code; used by the grid kernels."""
    if code == CODE_CDA:
        return np.full_like(arr, 1.0 / 3.0)
    if code == CODE_SUM:
        return 1.0 / (3.0 + arr)
    if code == CODE_MAX:
        return 1.0 / np.maximum(3.0, arr)
    if code == CODE_KERSHAW:
        return 2.0 / (3.0 + np.sqrt(9.0 + 4.0 * arr * arr))
    if code == CODE_LARSEN:
        return _larsen(arr, n)
    return _lp(arr)


def evaluate(limiter: FluxLimiter, r):
    """Evaluate F(R) for scalar or array ``r`` (R >= 0, finite)."""
    arr = np.asarray(r, dtype=np.float64)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError("R must be finite and nonnegative")
    scalar_in = arr.ndim == 0
    arr = np.atleast_1d(arr)
    code = limiter.code
    if code == CODE_CDA:
        out = np.full_like(arr, 1.0 / 3.0)
    elif code == CODE_SUM:
        out = 1.0 / (3.0 + arr)
    elif code == CODE_MAX:
        out = 1.0 / np.maximum(3.0, arr)
    elif code == CODE_KERSHAW:
        out = 2.0 / (3.0 + np.sqrt(9.0 + 4.0 * arr * arr))
    elif code == CODE_LARSEN:
        out = _larsen(arr, limiter.n)
    else:
        out = _lp(arr)
    return float(out[0]) if scalar_in else out
