"""Closed-form point-source solutions in an infinite homogeneous medium.

These serve as oracles for the grid solvers: the Grosjean transport
solution, the classical-diffusion Greens function, and the transport-limit
solution of the flux-limited equation.  Radial distance is parameterized
by optical depth tau = sigma_t * r, and fluences are for a unit power
source unless ``power`` says otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PointSourceParams:
    sigma_t: float
    albedo: float
    power: float = 1.0

    def __post_init__(self):
        if not self.sigma_t > 0:
            raise ValueError("sigma_t must be positive")
        if not 0.0 <= self.albedo <= 1.0:
            raise ValueError("albedo must lie in [0, 1]")

    @property
    def lam(self) -> float:
        """Screening exponent of the diffusive term."""
        return np.sqrt(3.0 * (1.0 - self.albedo) / (2.0 - self.albedo))


def _check_tau(tau):
    tau = np.asarray(tau, dtype=np.float64)
    if np.any(tau <= 0):
        raise ValueError("tau must be positive")
    return tau


def grosjean_fluence(tau, params: PointSourceParams):
    """Grosjean approximation to the exact transport fluence."""
    tau = _check_tau(tau)
    a = params.albedo
    ballistic = np.exp(-tau) / tau**2
    diffusive = (3.0 * a / (2.0 - a)) * np.exp(-params.lam * tau) / tau
    return params.power * params.sigma_t**2 / (4.0 * np.pi) * (ballistic + diffusive)


def cda_greens(tau, params: PointSourceParams):
    """Greens function of the classical diffusion equation."""
    tau = _check_tau(tau)
    mu = np.sqrt(3.0 * (1.0 - params.albedo))
    pref = 3.0 * params.power * params.sigma_t**2 / (4.0 * np.pi)
    return pref * np.exp(-mu * tau) / tau


def fld_transport_point(tau, params: PointSourceParams):
    """Transport-limit (ballistic) solution of the flux-limited equation."""
    tau = _check_tau(tau)
    pref = params.power * params.sigma_t**2 / (4.0 * np.pi)
    return pref * np.exp(-(1.0 - params.albedo) * tau) / tau**2


def normalized_fluence(phi, sigma_t):
    """Dimensionless fluence: 4 pi phi / sigma_t^2."""
    if not sigma_t > 0:
        raise ValueError("sigma_t must be positive")
    return 4.0 * np.pi * np.asarray(phi) / sigma_t**2


def grosjean_knudsen(tau, params: PointSourceParams):
    """Knudsen number |grad phi| / (sigma_t phi) of the Grosjean solution.

    The radial derivative is taken in closed form; with r = tau / sigma_t
    the sigma_t factors cancel and R = -phi'(tau) / phi(tau).
    """
    tau = _check_tau(tau)
    a = params.albedo
    c = 3.0 * a / (2.0 - a)
    lam = params.lam
    phi = np.exp(-tau) / tau**2 + c * np.exp(-lam * tau) / tau
    dphi = -np.exp(-tau) * (1.0 / tau**2 + 2.0 / tau**3) - c * np.exp(-lam * tau) * (
        lam / tau + 1.0 / tau**2
    )
    return -dphi / phi


def radial_profile(phi_field, center, sigma_t, nbins, margin=2):
    """Bin a gridded fluence by radial optical depth around ``center``.

    Returns (tau_centers, mean normalized fluence) over non-empty bins.
    The source voxel itself and ``margin`` voxel layers at the grid edge
    are excluded.
    """
    if nbins < 2:
        raise ValueError("need at least 2 bins")
    d = phi_field.dims
    ci, cj, ck = center
    if not (0 < ci < d.nx - 1 and 0 < cj < d.ny - 1 and 0 < ck < d.nz - 1):
        raise ValueError("center must be an interior voxel")
    m = max(int(margin), 1)
    ii = np.arange(m, d.nx - m)
    jj = np.arange(m, d.ny - m)
    kk = np.arange(m, d.nz - m)
    gi, gj, gk = np.meshgrid(ii, jj, kk, indexing="ij")
    r = d.dl * np.sqrt(
        (gi - ci) ** 2.0 + (gj - cj) ** 2.0 + (gk - ck) ** 2.0
    )
    tau = sigma_t * r.ravel()
    vals = phi_field.data[m : d.nx - m, m : d.ny - m, m : d.nz - m].ravel(order="C")
    vals = np.asarray(vals, dtype=np.float64)
    keep = tau > 0  # drops the source voxel when inside the window
    tau, vals = tau[keep], vals[keep]
    edges = np.linspace(0.0, tau.max(), nbins + 1)
    which = np.clip(np.searchsorted(edges, tau, side="right") - 1, 0, nbins - 1)
    sums = np.bincount(which, weights=vals, minlength=nbins)
    counts = np.bincount(which, minlength=nbins)
    nonempty = counts > 0
    centers = 0.5 * (edges[:-1] + edges[1:])
    mean_phi = sums[nonempty] / counts[nonempty]
    return centers[nonempty], normalized_fluence(mean_phi, sigma_t)
