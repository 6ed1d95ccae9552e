"""Red-black SOR Gauss-Seidel solver for flux-limited radiative diffusion.

Solves  div(D grad phi) = (1 - albedo) sigma phi - j  on a voxel grid,
where D = F(R) / sigma couples back to phi through the Knudsen number R.
The classical solver is the same relaxation with F pinned to 1/3; it has
its own dedicated kernel so the two can be cross-checked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .grid import GridDims, ScalarField, central_gradient, rms
from .limiters import LEVERMORE_POMRANING, FluxLimiter, evaluate

DEFAULT_CONV_TOL = {"double": 1e-6, "single": 1e-4}
_DTYPES = {"double": np.float64, "single": np.float32}


@dataclass
class SolverConfig:
    limiter: FluxLimiter = LEVERMORE_POMRANING
    omega: float = 1.5
    sigma_eps: float | None = None  # default 1e-3 / grid extent
    eps: float = 1e-20
    conv_tol: float | None = None  # default 1e-6 double, 1e-4 single
    max_iters: int = 20000
    boundary_margin: int = 2
    precision: str = "double"

    def __post_init__(self):
        if not 0.0 < self.omega < 2.0:
            raise ValueError("SOR factor omega must lie in (0, 2)")
        if self.sigma_eps is not None and not self.sigma_eps > 0:
            raise ValueError("sigma_eps must be positive")
        if self.conv_tol is not None and not self.conv_tol > 0:
            raise ValueError("conv_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.boundary_margin < 1:
            raise ValueError("boundary_margin must be >= 1")
        if self.precision not in _DTYPES:
            raise ValueError("precision must be 'single' or 'double'")

    def resolved_sigma_eps(self, dims: GridDims) -> float:
        if self.sigma_eps is not None:
            return self.sigma_eps
        return 1e-3 / max(dims.extent)

    def resolved_conv_tol(self) -> float:
        if self.conv_tol is not None:
            return self.conv_tol
        return DEFAULT_CONV_TOL[self.precision]


@dataclass
class SolveResult:
    phi: ScalarField
    D: ScalarField
    residual_history: np.ndarray
    iterations: int
    converged: bool


def _boundary_mask(dims: GridDims) -> np.ndarray:
    m = np.zeros(dims.shape, dtype=bool, order="F")
    m[0, :, :] = m[-1, :, :] = True
    m[:, 0, :] = m[:, -1, :] = True
    m[:, :, 0] = m[:, :, -1] = True
    return m


def solve(sigma_t: ScalarField, albedo: ScalarField, emission: ScalarField,
          config: SolverConfig, boundary_phi=None, kernel: str = "auto",
          phi0: ScalarField | None = None) -> SolveResult:
    """Run the relaxation to convergence or the iteration cap.

    ``boundary_phi``, when given, is a callback mapping an (N, 3) array of
    world positions to Dirichlet fluence values for the boundary voxels;
    otherwise the boundary is held at the tiny initialization value.

    ``phi0`` warm-starts the interior from a previous solution, e.g. one
    obtained on a coarser grid.  The fixed point is unchanged; only the
    iteration count is.

    ``kernel`` selects the code path: "auto" picks the dedicated classical
    kernel for the constant limiter and the flux-limited kernel otherwise;
    "fld" forces the generic path (useful to cross-check the two).
    """
    dims = sigma_t.dims
    if albedo.dims != dims or emission.dims != dims:
        raise ValueError("sigma_t, albedo and emission must share dimensions")
    if np.any(albedo.data < 0) or np.any(albedo.data > 1):
        raise ValueError("albedo must lie in [0, 1]")
    if np.any(sigma_t.data < 0):
        raise ValueError("sigma_t must be nonnegative")
    if np.any(emission.data < 0):
        raise ValueError("emission must be nonnegative")
    if kernel not in ("auto", "fld", "cda"):
        raise ValueError("kernel must be 'auto', 'fld' or 'cda'")
    if kernel == "auto":
        kernel = "cda" if config.limiter.kind == "cda" else "fld"
    if kernel == "cda" and config.limiter.kind != "cda":
        raise ValueError("dedicated classical kernel requires the cda limiter")

    dtype = _DTYPES[config.precision]
    jbar = rms(emission)
    if jbar == 0.0:
        raise ValueError("emission field is identically zero; nothing to solve")

    dl = dims.dl
    sigma_eps = config.resolved_sigma_eps(dims)
    conv_tol = config.resolved_conv_tol()
    sig = np.asfortranarray(np.maximum(sigma_t.data, sigma_eps).astype(dtype))
    alb = np.asfortranarray(albedo.data.astype(dtype))
    emi = np.asfortranarray(emission.data.astype(dtype))

    phi = np.full(dims.shape, config.eps * jbar * dl, dtype=dtype, order="F")
    if phi0 is not None:
        if phi0.dims != dims:
            raise ValueError("phi0 must share dimensions with the inputs")
        if np.any(phi0.data < 0) or not np.all(np.isfinite(phi0.data)):
            raise ValueError("phi0 must be finite and nonnegative")
        c = (slice(1, -1),) * 3
        # interior only: the rim keeps the tiny value (or the Dirichlet
        # values below), matching a cold start's boundary condition
        phi[c] = np.maximum(phi0.data[c].astype(dtype), phi[c])
    dcoef = np.full(dims.shape, config.eps * dl, dtype=dtype, order="F")
    res = np.zeros(dims.shape, dtype=dtype, order="F")

    if boundary_phi is not None:
        bmask = _boundary_mask(dims)
        idx = np.argwhere(bmask)
        pts = (idx + 0.5) * dl
        phi[tuple(idx.T)] = np.asarray(boundary_phi(pts), dtype=dtype)

    m = config.boundary_margin
    core = (slice(m, dims.nx - m), slice(m, dims.ny - m), slice(m, dims.nz - m))
    history = []
    converged = False
    iterations = 0
    lim = config.limiter
    for _ in range(config.max_iters):
        for color in (0, 1):
            if kernel == "cda":
                kernels.cda_pass(phi, dcoef, res, sig, alb, emi, dl,
                                 color, config.omega)
            else:
                kernels.fld_pass(phi, dcoef, res, sig, alb, emi, dl,
                                 color, config.omega, config.eps * jbar,
                                 lim.code, lim.n)
        iterations += 1
        rbar = float(np.sqrt(np.mean(np.square(res[core], dtype=np.float64))))
        rel = rbar / jbar
        history.append(rel)
        if rel <= conv_tol:
            converged = True
            break

    return SolveResult(
        phi=ScalarField(dims, phi),
        D=ScalarField(dims, dcoef),
        residual_history=np.array(history),
        iterations=iterations,
        converged=converged,
    )


# Reference single-voxel forms of the update rules.  They mirror the kernel
# arithmetic and exist so tests can probe the compiled passes voxel by voxel.

def knudsen(p, phi: ScalarField, sigma: ScalarField, eps_jbar: float) -> float:
    """Floored Knudsen number at interior voxel ``p`` (sigma pre-floored)."""
    g = central_gradient(phi, p)
    gmag = float(np.sqrt(g @ g))
    i, j, k = p
    return max(gmag, eps_jbar) / max(float(sigma.data[i, j, k]) * float(phi.data[i, j, k]), eps_jbar)


def update_d(p, phi: ScalarField, sigma_t: ScalarField, limiter: FluxLimiter,
             sigma_eps: float, eps_jbar: float) -> float:
    """New diffusion coefficient F(R) / max(sigma, sigma_eps) at voxel ``p``."""
    i, j, k = p
    sig = max(float(sigma_t.data[i, j, k]), sigma_eps)
    g = central_gradient(phi, p)
    gmag = float(np.sqrt(g @ g))
    r = max(gmag, eps_jbar) / max(sig * float(phi.data[i, j, k]), eps_jbar)
    return evaluate(limiter, r) / sig


def _num_den(p, phi, dcoef, sigma, albedo, emission):
    i, j, k = p
    dl = phi.dims.dl
    dp = dcoef.data[i, j, k]
    neighbors = [(i - 1, j, k), (i + 1, j, k), (i, j - 1, k),
                 (i, j + 1, k), (i, j, k - 1), (i, j, k + 1)]
    num = emission.data[i, j, k] * dl * dl
    den = (1.0 - albedo.data[i, j, k]) * sigma.data[i, j, k] * dl * dl
    for s in neighbors:
        dps = 0.5 * (dp + dcoef.data[s])
        num += dps * phi.data[s]
        den += dps
    return float(num), float(den)


def update_phi(p, phi: ScalarField, dcoef: ScalarField, sigma: ScalarField,
               albedo: ScalarField, emission: ScalarField) -> float:
    """Gauss-Seidel fixed-point value of phi at interior voxel ``p``."""
    num, den = _num_den(p, phi, dcoef, sigma, albedo, emission)
    return num / den


def residual(p, phi: ScalarField, dcoef: ScalarField, sigma: ScalarField,
             albedo: ScalarField, emission: ScalarField) -> float:
    """Pointwise defect of the discretized equation at voxel ``p``."""
    num, den = _num_den(p, phi, dcoef, sigma, albedo, emission)
    i, j, k = p
    dl = phi.dims.dl
    return (num - float(phi.data[i, j, k]) * den) / (dl * dl)


def flux(phi: ScalarField, dcoef: ScalarField) -> np.ndarray:
    """Fick's-law flux -D grad(phi), shape (3, nx, ny, nz), zero at the rim."""
    dims = phi.dims
    out = np.zeros((3,) + dims.shape)
    a = phi.data
    inv2 = 1.0 / (2.0 * dims.dl)
    c = (slice(1, -1),) * 3
    d = dcoef.data[c]
    out[(0,) + c] = -d * (a[2:, 1:-1, 1:-1] - a[:-2, 1:-1, 1:-1]) * inv2
    out[(1,) + c] = -d * (a[1:-1, 2:, 1:-1] - a[1:-1, :-2, 1:-1]) * inv2
    out[(2,) + c] = -d * (a[1:-1, 1:-1, 2:] - a[1:-1, 1:-1, :-2]) * inv2
    return out
