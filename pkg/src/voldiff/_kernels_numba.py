"""Numba-compiled grid kernels: SOR relaxation, shadow-map bake, raymarch.

Twin of ``_kernels_numpy`` (same signatures, same arithmetic ordering).
Importing this module requires numba; ``kernels`` falls back to the numpy
implementations when numba is unavailable or disabled.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from .limiters import (
    CODE_CDA,
    CODE_KERSHAW,
    CODE_LARSEN,
    CODE_LP,
    CODE_MAX,
    CODE_SUM,
    LP_TAYLOR_THRESHOLD,
)

_jit = numba.njit(cache=True)
_pjit = numba.njit(cache=True, parallel=True)


@_jit
def _limiter_scalar(code, n, r):
    if code == CODE_CDA:
        return 1.0 / 3.0
    if code == CODE_SUM:
        return 1.0 / (3.0 + r)
    if code == CODE_MAX:
        return 1.0 / (3.0 if r < 3.0 else r)
    if code == CODE_KERSHAW:
        return 2.0 / (3.0 + math.sqrt(9.0 + 4.0 * r * r))
    if code == CODE_LARSEN:
        if r <= 3.0:
            return (1.0 / 3.0) * (1.0 + (r / 3.0) ** n) ** (-1.0 / n)
        return (1.0 / r) * (1.0 + (3.0 / r) ** n) ** (-1.0 / n)
    if r < LP_TAYLOR_THRESHOLD:
        r2 = r * r
        return 1.0 / 3.0 - r2 / 45.0 + 2.0 * r2 * r2 / 945.0
    return (1.0 / math.tanh(r) - 1.0 / r) / r


@_pjit
def fld_pass(phi, D, res, sigma, albedo, emission, dl, color, omega,
             eps_jbar, code, larsen_n):
    nx, ny, nz = phi.shape
    dl2 = dl * dl
    inv2 = 1.0 / (2.0 * dl)
    for k in numba.prange(1, nz - 1):
        for j in range(1, ny - 1):
            target = (color + j + k) & 1
            for i in range(2 - target, nx - 1, 2):
                sig = sigma[i, j, k]
                ph = phi[i, j, k]
                gx = (phi[i + 1, j, k] - phi[i - 1, j, k]) * inv2
                gy = (phi[i, j + 1, k] - phi[i, j - 1, k]) * inv2
                gz = (phi[i, j, k + 1] - phi[i, j, k - 1]) * inv2
                gmag = math.sqrt(gx * gx + gy * gy + gz * gz)
                knud = max(gmag, eps_jbar) / max(sig * ph, eps_jbar)
                dp = _limiter_scalar(code, larsen_n, knud) / sig
                D[i, j, k] = dp
                hxm = 0.5 * (dp + D[i - 1, j, k])
                hxp = 0.5 * (dp + D[i + 1, j, k])
                hym = 0.5 * (dp + D[i, j - 1, k])
                hyp = 0.5 * (dp + D[i, j + 1, k])
                hzm = 0.5 * (dp + D[i, j, k - 1])
                hzp = 0.5 * (dp + D[i, j, k + 1])
                snum = (hxm * phi[i - 1, j, k] + hxp * phi[i + 1, j, k]
                        + hym * phi[i, j - 1, k] + hyp * phi[i, j + 1, k]
                        + hzm * phi[i, j, k - 1] + hzp * phi[i, j, k + 1])
                sden = hxm + hxp + hym + hyp + hzm + hzp
                num = emission[i, j, k] * dl2 + snum
                den = (1.0 - albedo[i, j, k]) * sig * dl2 + sden
                res[i, j, k] = (num - ph * den) / dl2
                # clamp at zero: over-relaxed undershoot must not turn the
                # fluence negative, which destabilizes the Knudsen feedback
                phi[i, j, k] = max(omega * (num / den) + (1.0 - omega) * ph, 0.0)


@_pjit
def cda_pass(phi, D, res, sigma, albedo, emission, dl, color, omega):
    nx, ny, nz = phi.shape
    dl2 = dl * dl
    for k in numba.prange(1, nz - 1):
        for j in range(1, ny - 1):
            target = (color + j + k) & 1
            for i in range(2 - target, nx - 1, 2):
                sig = sigma[i, j, k]
                ph = phi[i, j, k]
                dp = (1.0 / 3.0) / sig
                D[i, j, k] = dp
                hxm = 0.5 * (dp + D[i - 1, j, k])
                hxp = 0.5 * (dp + D[i + 1, j, k])
                hym = 0.5 * (dp + D[i, j - 1, k])
                hyp = 0.5 * (dp + D[i, j + 1, k])
                hzm = 0.5 * (dp + D[i, j, k - 1])
                hzp = 0.5 * (dp + D[i, j, k + 1])
                snum = (hxm * phi[i - 1, j, k] + hxp * phi[i + 1, j, k]
                        + hym * phi[i, j - 1, k] + hyp * phi[i, j + 1, k]
                        + hzm * phi[i, j, k - 1] + hzp * phi[i, j, k + 1])
                sden = hxm + hxp + hym + hyp + hzm + hzp
                num = emission[i, j, k] * dl2 + snum
                den = (1.0 - albedo[i, j, k]) * sig * dl2 + sden
                res[i, j, k] = (num - ph * den) / dl2
                # clamp at zero: over-relaxed undershoot must not turn the
                # fluence negative, which destabilizes the Knudsen feedback
                phi[i, j, k] = max(omega * (num / den) + (1.0 - omega) * ph, 0.0)


@_jit
def _trilerp(a, dl, x, y, z):
    nx, ny, nz = a.shape
    ux = min(max(x / dl - 0.5, 0.0), nx - 1.0)
    uy = min(max(y / dl - 0.5, 0.0), ny - 1.0)
    uz = min(max(z / dl - 0.5, 0.0), nz - 1.0)
    i0 = max(min(int(math.floor(ux)), nx - 2), 0)
    j0 = max(min(int(math.floor(uy)), ny - 2), 0)
    k0 = max(min(int(math.floor(uz)), nz - 2), 0)
    fx = ux - i0
    fy = uy - j0
    fz = uz - k0
    i1 = min(i0 + 1, nx - 1)
    j1 = min(j0 + 1, ny - 1)
    k1 = min(k0 + 1, nz - 1)
    c00 = a[i0, j0, k0] * (1 - fx) + a[i1, j0, k0] * fx
    c10 = a[i0, j1, k0] * (1 - fx) + a[i1, j1, k0] * fx
    c01 = a[i0, j0, k1] * (1 - fx) + a[i1, j0, k1] * fx
    c11 = a[i0, j1, k1] * (1 - fx) + a[i1, j1, k1] * fx
    return (c00 * (1 - fy) + c10 * fy) * (1 - fz) + (c01 * (1 - fy) + c11 * fy) * fz


@_jit
def _exit_t(ox, oy, oz, dx, dy, dz, bx, by, bz):
    t = np.inf
    if abs(dx) >= 1e-12:
        t = min(t, ((bx if dx > 0 else 0.0) - ox) / dx)
    if abs(dy) >= 1e-12:
        t = min(t, ((by if dy > 0 else 0.0) - oy) / dy)
    if abs(dz) >= 1e-12:
        t = min(t, ((bz if dz > 0 else 0.0) - oz) / dz)
    return max(t, 0.0)


@_pjit
def bake_dsm(sigma, dl, direction, step):
    nx, ny, nz = sigma.shape
    bx, by, bz = nx * dl, ny * dl, nz * dl
    dx, dy, dz = -direction[0], -direction[1], -direction[2]
    norm = math.sqrt(dx * dx + dy * dy + dz * dz)
    dx, dy, dz = dx / norm, dy / norm, dz / norm
    out = np.empty((nx, ny, nz))
    for k in numba.prange(nz):
        for j in range(ny):
            for i in range(nx):
                ox = (i + 0.5) * dl
                oy = (j + 0.5) * dl
                oz = (k + 0.5) * dl
                t_exit = _exit_t(ox, oy, oz, dx, dy, dz, bx, by, bz)
                n_full = int(math.floor(t_exit / step))
                tau = 0.0
                for m in range(n_full):
                    t = (m + 0.5) * step
                    tau += _trilerp(sigma, dl, ox + t * dx, oy + t * dy, oz + t * dz) * step
                rem = t_exit - n_full * step
                t = n_full * step + 0.5 * rem
                tau += _trilerp(sigma, dl, ox + t * dx, oy + t * dy, oz + t * dz) * rem
                out[i, j, k] = math.exp(-tau)
    return np.asfortranarray(out)


@_jit
def _ray_box_scalar(ox, oy, oz, dx, dy, dz, bx, by, bz):
    t0 = 0.0
    t1 = np.inf
    for ax in range(3):
        if ax == 0:
            o, d, b = ox, dx, bx
        elif ax == 1:
            o, d, b = oy, dy, by
        else:
            o, d, b = oz, dz, bz
        if abs(d) < 1e-15:
            if o < 0.0 or o > b:
                return 0.0, 0.0
            continue
        ta = (0.0 - o) / d
        tb = (b - o) / d
        lo = min(ta, tb)
        hi = max(ta, tb)
        t0 = max(t0, lo)
        t1 = min(t1, hi)
    if t1 <= t0:
        return 0.0, 0.0
    return t0, t1


@_pjit
def render_channel(sigma, albedo, emission, qri, phi, phi_dl, dl, step,
                   cam_pos, cam_right, cam_up, cam_fwd, tan_half_fov,
                   width, height, background):
    nx, ny, nz = sigma.shape
    bx, by, bz = nx * dl, ny * dl, nz * dl
    aspect = width / height
    img = np.zeros((height, width))
    inv4pi = 1.0 / (4.0 * np.pi)
    for py in numba.prange(height):
        for px in range(width):
            u = (2.0 * (px + 0.5) / width - 1.0) * tan_half_fov * aspect
            v = (1.0 - 2.0 * (py + 0.5) / height) * tan_half_fov
            dx = cam_fwd[0] + u * cam_right[0] + v * cam_up[0]
            dy = cam_fwd[1] + u * cam_right[1] + v * cam_up[1]
            dz = cam_fwd[2] + u * cam_right[2] + v * cam_up[2]
            norm = math.sqrt(dx * dx + dy * dy + dz * dz)
            dx, dy, dz = dx / norm, dy / norm, dz / norm
            ox, oy, oz = cam_pos[0], cam_pos[1], cam_pos[2]
            t0, t1 = _ray_box_scalar(ox, oy, oz, dx, dy, dz, bx, by, bz)
            span = t1 - t0
            radiance = 0.0
            trans = 1.0
            if span > 0.0:
                nseg = max(int(math.ceil(span / step)), 1)
                h = span / nseg
                for m in range(nseg):
                    t = t0 + (m + 0.5) * h
                    x = ox + t * dx
                    y = oy + t * dy
                    z = oz + t * dz
                    sig = _trilerp(sigma, dl, x, y, z)
                    alb = _trilerp(albedo, dl, x, y, z)
                    emi = _trilerp(emission, dl, x, y, z)
                    qr = _trilerp(qri, dl, x, y, z)
                    ph = _trilerp(phi, phi_dl, x, y, z)
                    q = (qr + alb * sig * ph + emi) * inv4pi
                    radiance += trans * math.exp(-0.5 * sig * h) * q * h
                    trans *= math.exp(-sig * h)
            img[py, px] = radiance + background * trans
    return img
