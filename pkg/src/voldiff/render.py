"""Primary-ray volume renderer: accumulate source radiance along camera rays."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .grid import ScalarField, trilinear_sample

_ZERO_FIELD = np.zeros((1, 1, 1), order="F")


@dataclass(frozen=True)
class Camera:
    position: np.ndarray
    right: np.ndarray
    up: np.ndarray
    forward: np.ndarray
    fov_y: float  # vertical field of view, radians
    width: int
    height: int

    def __post_init__(self):
        basis = np.stack([self.right, self.up, self.forward])
        if not np.allclose(basis @ basis.T, np.eye(3), atol=1e-6):
            raise ValueError("camera basis must be orthonormal")
        if not 0.0 < self.fov_y < np.pi:
            raise ValueError("fov must lie in (0, pi)")
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")

    @classmethod
    def look_at(cls, position, target, up, fov_y, width, height) -> "Camera":
        position = np.asarray(position, dtype=np.float64)
        fwd = np.asarray(target, dtype=np.float64) - position
        fwd = fwd / np.linalg.norm(fwd)
        right = np.cross(np.asarray(up, dtype=np.float64), fwd)
        right = right / np.linalg.norm(right)
        true_up = np.cross(fwd, right)
        return cls(position, right, true_up, fwd, fov_y, width, height)


@dataclass
class HdrImage:
    width: int
    height: int
    pixels: np.ndarray = field(repr=False)  # (height, width, 3) float32

    def __post_init__(self):
        if self.pixels.shape != (self.height, self.width, 3):
            raise ValueError("pixel buffer shape mismatch")

    @classmethod
    def zeros(cls, width, height):
        return cls(width, height, np.zeros((height, width, 3), dtype=np.float32))

    def check_finite(self):
        if not np.all(np.isfinite(self.pixels)) or np.any(self.pixels < 0):
            raise ValueError("image must be finite and nonnegative")


def transmittance(sigma_t: ScalarField, a, b, step: float) -> float:
    """Beer-Lambert transmittance along the segment a->b, midpoint sampling."""
    if not step > 0:
        raise ValueError("step must be positive")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    length = float(np.linalg.norm(b - a))
    if length == 0.0:
        return 1.0
    n = max(int(np.ceil(length / step)), 1)
    h = length / n
    d = (b - a) / length
    ts = (np.arange(n) + 0.5) * h
    pts = a[None, :] + ts[:, None] * d[None, :]
    tau = float(np.sum(trilinear_sample(sigma_t, pts)) * h)
    return float(np.exp(-tau))


def render(sigma_t, albedo, emission, qri, phi, camera: Camera, background,
           step: float | None = None) -> HdrImage:
    """Raymarch all three channels through the medium.

    ``sigma_t``, ``albedo``, ``emission`` are 3-tuples of ScalarField on the
    medium grid; ``qri`` and ``phi`` are 3-tuples or None.  ``phi`` may live
    on a coarser grid and is sampled in world space.
    """
    dims = sigma_t[0].dims
    if step is None:
        step = 0.5 * dims.dl
    background = np.asarray(background, dtype=np.float64)
    img = HdrImage.zeros(camera.width, camera.height)
    for c in range(3):
        qarr = _ZERO_FIELD if qri is None else np.asfortranarray(qri[c].data.astype(np.float64))
        if phi is None:
            parr, pdl = _ZERO_FIELD, dims.dl
        else:
            parr = np.asfortranarray(phi[c].data.astype(np.float64))
            pdl = phi[c].dims.dl
        channel = kernels.render_channel(
            np.asfortranarray(sigma_t[c].data.astype(np.float64)),
            np.asfortranarray(albedo[c].data.astype(np.float64)),
            np.asfortranarray(emission[c].data.astype(np.float64)),
            qarr, parr, pdl, dims.dl, float(step),
            np.asarray(camera.position, dtype=np.float64),
            np.asarray(camera.right, dtype=np.float64),
            np.asarray(camera.up, dtype=np.float64),
            np.asarray(camera.forward, dtype=np.float64),
            float(np.tan(0.5 * camera.fov_y)),
            camera.width, camera.height, float(background[c]),
        )
        img.pixels[:, :, c] = channel.astype(np.float32)
    return img


def tonemap(img: HdrImage, exposure: float = 1.0, gamma: float = 2.2) -> np.ndarray:
    """Gamma-compress to 8-bit RGB: clamp((exposure*v)^(1/gamma)) * 255."""
    if not exposure > 0 or not gamma > 0:
        raise ValueError("exposure and gamma must be positive")
    v = np.clip(exposure * img.pixels.astype(np.float64), 0.0, None)
    v = np.clip(v ** (1.0 / gamma), 0.0, 1.0)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)
