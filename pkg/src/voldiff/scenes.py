"""Test scenes: point-source grids, noisy emission spheres, nebulae clouds.

Scenes are 3-channel volumes on a unit-extent grid (L = 1 m) plus an
optional directional light, a background radiance and a camera.  They
serialize to a directory of VGRD1 grids plus a flat key=value manifest.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .grid import GridDims, ScalarField, read_vgrd, write_vgrd
from .lightbake import DirectionalLight
from .noise import fbm, gradient_noise
from .render import Camera

CHANNELS = ("r", "g", "b")


@dataclass
class Scene:
    sigma_t: tuple
    albedo: tuple
    emission: tuple
    light: DirectionalLight | None
    background: np.ndarray
    camera: Camera

    def __post_init__(self):
        dims = self.sigma_t[0].dims
        for fields in (self.sigma_t, self.albedo, self.emission):
            if len(fields) != 3 or any(f.dims != dims for f in fields):
                raise ValueError("all channel fields must share dimensions")
        for f in self.albedo:
            if np.any(f.data < 0) or np.any(f.data > 1):
                raise ValueError("albedo must lie in [0, 1]")

    @property
    def dims(self) -> GridDims:
        return self.sigma_t[0].dims


def default_camera(width=256, height=256) -> Camera:
    return Camera.look_at(
        position=(0.5, 0.45, -1.35),
        target=(0.5, 0.5, 0.5),
        up=(0.0, 1.0, 0.0),
        fov_y=np.deg2rad(45.0),
        width=width,
        height=height,
    )


def _voxel_centers(dims: GridDims) -> np.ndarray:
    xs = (np.arange(dims.nx) + 0.5) * dims.dl
    ys = (np.arange(dims.ny) + 0.5) * dims.dl
    zs = (np.arange(dims.nz) + 0.5) * dims.dl
    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)


def _tri(data, dims):
    # Channels share one read-only field to keep large grids cheap.
    f = ScalarField(dims, np.asfortranarray(data))
    return (f, f, f)


def make_point_source(res: int, tau_across: float, albedo: float,
                      power: float = 1.0) -> Scene:
    """Single emitting voxel at the grid center in a homogeneous medium."""
    if res % 2 == 0:
        raise ValueError("resolution must be odd so a center voxel exists")
    if not tau_across > 0:
        raise ValueError("tau_across must be positive")
    if not 0.0 <= albedo <= 1.0:
        raise ValueError("albedo must lie in [0, 1]")
    dl = 1.0 / res
    dims = GridDims(res, res, res, dl)
    sigma = np.full(dims.shape, tau_across, order="F")  # tau / L with L = 1
    alb = np.full(dims.shape, albedo, order="F")
    emi = np.zeros(dims.shape, order="F")
    c = res // 2
    emi[c, c, c] = power / dl**3
    return Scene(
        sigma_t=_tri(sigma, dims),
        albedo=_tri(alb, dims),
        emission=_tri(emi, dims),
        light=None,
        background=np.zeros(3),
        camera=default_camera(),
    )


def make_noise_sphere(res: int, seed: int = 0, sigma_inside: float = 12.0,
                      albedo: float = 0.95, radius: float = 0.4) -> Scene:
    """Homogeneous sphere in vacuum with a noisy internal emission field."""
    if res < 16:
        raise ValueError("resolution must be >= 16")
    dl = 1.0 / res
    dims = GridDims(res, res, res, dl)
    pts = _voxel_centers(dims)
    r = np.linalg.norm(pts - 0.5, axis=1)
    inside = (r < radius).reshape(dims.shape)
    sigma = np.where(inside, sigma_inside, 0.0)
    alb = np.where(inside, albedo, 0.0)
    noise = gradient_noise(pts * 6.0, seed=seed).reshape(dims.shape)
    emi = np.where(inside, np.abs(noise) + 0.05, 0.0)
    return Scene(
        sigma_t=_tri(np.asfortranarray(sigma), dims),
        albedo=_tri(np.asfortranarray(alb), dims),
        emission=_tri(np.asfortranarray(emi), dims),
        light=None,
        background=np.zeros(3),
        camera=default_camera(),
    )


def make_nebulae(res: int, octaves: int = 5, frequency: float = 3.0,
                 amplitude: float = 0.15, seed: int = 0, albedo: float = 0.9,
                 channel_scales=(1.0, 0.8, 0.62), base_extinction: float = 40.0,
                 light: DirectionalLight | None = None) -> Scene:
    """Noise-displaced implicit sphere lit by a directional light."""
    if res < 16:
        raise ValueError("resolution must be >= 16")
    dl = 1.0 / res
    dims = GridDims(res, res, res, dl)
    pts = _voxel_centers(dims)
    r = np.linalg.norm(pts - 0.5, axis=1)
    displaced = 0.35 + amplitude * fbm(pts, octaves=octaves, frequency=frequency,
                                       seed=seed, kind="value")
    shell = 0.04  # soft transition width so the surface is not aliased
    density = np.clip((displaced - r) / shell, 0.0, 1.0).reshape(dims.shape)
    if light is None:
        light = DirectionalLight(
            radiance=np.array([6.0, 6.0, 6.0]),
            direction=_unit((-0.45, -0.8, 0.4)),
        )
    # float32 keeps the 200^3 production scene comfortably in memory
    sigma = [
        ScalarField(dims, np.asfortranarray((base_extinction * s * density).astype(np.float32)))
        for s in channel_scales
    ]
    alb = np.full(dims.shape, albedo, dtype=np.float32, order="F")
    emi = np.zeros(dims.shape, dtype=np.float32, order="F")
    return Scene(
        sigma_t=tuple(sigma),
        albedo=_tri(alb, dims),
        emission=_tri(emi, dims),
        light=light,
        background=np.zeros(3),
        camera=default_camera(),
    )


def _unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------------------
# Serialization: directory of VGRD1 grids plus a scene.txt manifest.

def save_scene(scene: Scene, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    lines = []
    for name, fields in (("sigma_t", scene.sigma_t), ("albedo", scene.albedo),
                         ("emission", scene.emission)):
        for c, f in zip(CHANNELS, fields):
            fname = f"{name}_{c}.vgrd"
            write_vgrd(os.path.join(out_dir, fname), f)
            lines.append(f"{name}.{c} = {fname}")
    if scene.light is not None:
        d = scene.light.direction
        rad = scene.light.radiance
        lines.append(f"light.direction = {d[0]:.17g} {d[1]:.17g} {d[2]:.17g}")
        lines.append(f"light.radiance = {rad[0]:.17g} {rad[1]:.17g} {rad[2]:.17g}")
    bg = scene.background
    lines.append(f"background = {bg[0]:.17g} {bg[1]:.17g} {bg[2]:.17g}")
    cam = scene.camera
    lines.append("camera.position = " + " ".join(f"{v:.17g}" for v in cam.position))
    target = cam.position + cam.forward
    lines.append("camera.look_at = " + " ".join(f"{v:.17g}" for v in target))
    lines.append("camera.up = " + " ".join(f"{v:.17g}" for v in cam.up))
    lines.append(f"camera.fov_deg = {np.rad2deg(cam.fov_y):.17g}")
    lines.append(f"camera.width = {cam.width}")
    lines.append(f"camera.height = {cam.height}")
    with open(os.path.join(out_dir, "scene.txt"), "w") as fh:
        fh.write("# scene manifest\n")
        fh.write("\n".join(lines) + "\n")


def load_scene(scene_dir) -> Scene:
    manifest = os.path.join(scene_dir, "scene.txt")
    kv = read_kv(manifest)
    fields = {}
    for name in ("sigma_t", "albedo", "emission"):
        fields[name] = tuple(
            read_vgrd(os.path.join(scene_dir, kv[f"{name}.{c}"])) for c in CHANNELS
        )
    light = None
    if "light.direction" in kv:
        light = DirectionalLight(
            radiance=_vec3(kv["light.radiance"]),
            direction=_unit(_vec3(kv["light.direction"])),
        )
    camera = Camera.look_at(
        position=_vec3(kv["camera.position"]),
        target=_vec3(kv["camera.look_at"]),
        up=_vec3(kv["camera.up"]),
        fov_y=np.deg2rad(float(kv["camera.fov_deg"])),
        width=int(kv["camera.width"]),
        height=int(kv["camera.height"]),
    )
    return Scene(
        sigma_t=fields["sigma_t"],
        albedo=fields["albedo"],
        emission=fields["emission"],
        light=light,
        background=_vec3(kv["background"]),
        camera=camera,
    )


def _vec3(text):
    parts = [float(tok) for tok in text.split()]
    if len(parts) != 3:
        raise ValueError(f"expected 3 numbers, got {text!r}")
    return np.array(parts)


def read_kv(path) -> dict:
    """Flat ``key = value`` config with # comments."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out
