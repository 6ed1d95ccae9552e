"""Procedural 3D noise: gradient (Perlin-style) and lattice value noise.

Both are seeded, unbounded in domain, and vectorized over point arrays.
"""

from __future__ import annotations

import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


def _hash_coords(ix, iy, iz, seed):
    """Mix integer lattice coordinates into uniform uint64 hashes."""
    with np.errstate(over="ignore"):  # uint64 mixing relies on wraparound
        h = (ix.astype(np.uint64) * np.uint64(0x9E3779B97F4A7C15)
             ^ iy.astype(np.uint64) * np.uint64(0xC2B2AE3D27D4EB4F)
             ^ iz.astype(np.uint64) * np.uint64(0x165667B19E3779F9)
             ^ np.uint64(seed & 0xFFFFFFFFFFFFFFFF) * np.uint64(0x27D4EB2F165667C5))
        h ^= h >> np.uint64(33)
        h *= np.uint64(0xFF51AFD7ED558CCD)
        h ^= h >> np.uint64(33)
        h *= np.uint64(0xC4CEB9FE1A85EC53)
        h ^= h >> np.uint64(33)
    return h


def _smooth(t):
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def _corner_value(ix, iy, iz, seed):
    return (_hash_coords(ix, iy, iz, seed) >> np.uint64(11)) * (1.0 / 2**53)


def _corner_gradient_dot(ix, iy, iz, fx, fy, fz, seed):
    """Dot product of a hashed unit-ish gradient with the offset vector."""
    h = _hash_coords(ix, iy, iz, seed)
    # Three signed components in [-1, 1) from disjoint bit ranges.
    gx = ((h & np.uint64(0x1FFFFF)).astype(np.float64) / 0x100000) - 1.0
    gy = (((h >> np.uint64(21)) & np.uint64(0x1FFFFF)).astype(np.float64) / 0x100000) - 1.0
    gz = (((h >> np.uint64(42)) & np.uint64(0x1FFFFF)).astype(np.float64) / 0x100000) - 1.0
    norm = np.sqrt(gx * gx + gy * gy + gz * gz)
    norm = np.where(norm < 1e-12, 1.0, norm)
    return (gx * fx + gy * fy + gz * fz) / norm


def _lattice_eval(pts, seed, corner_fn):
    p = np.asarray(pts, dtype=np.float64)
    i0 = np.floor(p).astype(np.int64)
    f = p - i0
    w = _smooth(f)
    acc = np.zeros(len(p))
    for cx in (0, 1):
        for cy in (0, 1):
            for cz in (0, 1):
                ix, iy, iz = i0[:, 0] + cx, i0[:, 1] + cy, i0[:, 2] + cz
                wx = w[:, 0] if cx else 1.0 - w[:, 0]
                wy = w[:, 1] if cy else 1.0 - w[:, 1]
                wz = w[:, 2] if cz else 1.0 - w[:, 2]
                fx, fy, fz = f[:, 0] - cx, f[:, 1] - cy, f[:, 2] - cz
                acc += wx * wy * wz * corner_fn(ix, iy, iz, fx, fy, fz, seed)
    return acc


def gradient_noise(pts, seed=0):
    """Perlin-style gradient noise, roughly in [-1, 1], zero at lattice points."""
    return _lattice_eval(pts, seed, _corner_gradient_dot)


def value_noise(pts, seed=0):
    """Smoothed lattice value noise in [0, 1)."""
    def corner(ix, iy, iz, fx, fy, fz, s):
        return _corner_value(ix, iy, iz, s)
    return _lattice_eval(pts, seed, corner)


def fbm(pts, octaves=4, frequency=1.0, amplitude=1.0, seed=0,
        lacunarity=2.0, gain=0.5, kind="value"):
    """Fractal sum of noise octaves; ``kind`` is "value" or "gradient"."""
    fn = value_noise if kind == "value" else gradient_noise
    pts = np.asarray(pts, dtype=np.float64)
    out = np.zeros(len(pts))
    amp = amplitude
    freq = frequency
    for o in range(octaves):
        base = fn(pts * freq, seed + o)
        if kind == "value":
            base = 2.0 * base - 1.0  # recentre so octaves can cancel
        out += amp * base
        amp *= gain
        freq *= lacunarity
    return out
