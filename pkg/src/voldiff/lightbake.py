"""Directional-light baking: deep shadow map and first-scatter source field."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .grid import ScalarField


@dataclass(frozen=True)
class DirectionalLight:
    radiance: np.ndarray  # RGB, W/m^2/sr
    direction: np.ndarray  # unit vector, direction of photon travel

    def __post_init__(self):
        rad = np.asarray(self.radiance, dtype=np.float64)
        direc = np.asarray(self.direction, dtype=np.float64)
        if rad.shape != (3,) or np.any(rad < 0):
            raise ValueError("radiance must be a nonnegative RGB triple")
        n = np.linalg.norm(direc)
        if direc.shape != (3,) or abs(n - 1.0) > 1e-6:
            raise ValueError("direction must be a unit 3-vector")
        object.__setattr__(self, "radiance", rad)
        object.__setattr__(self, "direction", direc)


def bake_dsm(sigma_t: ScalarField, light: DirectionalLight,
             step: float | None = None) -> ScalarField:
    """Transmittance from each voxel center toward the light.

    Rays march against the light's travel direction to the grid boundary,
    accumulating optical depth by trilinear sampling at step dl/2.
    """
    dims = sigma_t.dims
    if step is None:
        step = 0.5 * dims.dl
    t = kernels.bake_dsm(
        np.asfortranarray(sigma_t.data.astype(np.float64)),
        dims.dl,
        np.asarray(light.direction, dtype=np.float64),
        float(step),
    )
    return ScalarField(dims, t)


def bake_qri(sigma_s: ScalarField, transmittance: ScalarField,
             radiance: float) -> ScalarField:
    """First-scatter source density: L * sigma_s * T, one channel at a time."""
    if sigma_s.dims != transmittance.dims:
        raise ValueError("sigma_s and transmittance must share dimensions")
    return ScalarField(
        sigma_s.dims,
        np.asfortranarray(radiance * sigma_s.data * transmittance.data),
    )


def combine_sources(qri: ScalarField, emission: ScalarField) -> ScalarField:
    """Fold the external-illumination source into the emission field."""
    if qri.dims != emission.dims:
        raise ValueError("source fields must share dimensions")
    return ScalarField(qri.dims, np.asfortranarray(qri.data + emission.data))
