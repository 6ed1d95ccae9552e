"""Vectorized numpy implementations of the grid kernels.

These are the fallback twins of ``_kernels_numba``; both expose the same
function signatures and must produce the same results (up to libm ulp
differences in sqrt/tanh).  Selected via ``VOLDIFF_DISABLE_NUMBA=1``.
"""

from __future__ import annotations

import numpy as np

from .limiters import evaluate_code

_mask_cache: dict = {}


def _color_masks(shape, color):
    key = (shape, color)
    m = _mask_cache.get(key)
    if m is None:
        nx, ny, nz = shape
        gi, gj, gk = np.meshgrid(
            np.arange(1, nx - 1), np.arange(1, ny - 1), np.arange(1, nz - 1),
            indexing="ij",
        )
        m = ((gi + gj + gk) % 2) == color
        _mask_cache[key] = m
    return m


def _interior_views(a):
    return (
        a[1:-1, 1:-1, 1:-1],
        a[:-2, 1:-1, 1:-1],
        a[2:, 1:-1, 1:-1],
        a[1:-1, :-2, 1:-1],
        a[1:-1, 2:, 1:-1],
        a[1:-1, 1:-1, :-2],
        a[1:-1, 1:-1, 2:],
    )


def _relax_color(phi, D, res, sigma, albedo, emission, dl, color, omega, d_new):
    """Shared phi/residual update once the new same-color D values are known."""
    mask = _color_masks(phi.shape, color)
    dc = D[1:-1, 1:-1, 1:-1]
    dc[mask] = d_new[mask]
    p, pxm, pxp, pym, pyp, pzm, pzp = _interior_views(phi)
    _, dxm, dxp, dym, dyp, dzm, dzp = _interior_views(D)
    dl2 = dl * dl
    hxm = 0.5 * (dc + dxm)
    hxp = 0.5 * (dc + dxp)
    hym = 0.5 * (dc + dym)
    hyp = 0.5 * (dc + dyp)
    hzm = 0.5 * (dc + dzm)
    hzp = 0.5 * (dc + dzp)
    snum = hxm * pxm + hxp * pxp + hym * pym + hyp * pyp + hzm * pzm + hzp * pzp
    sden = hxm + hxp + hym + hyp + hzm + hzp
    num = emission[1:-1, 1:-1, 1:-1] * dl2 + snum
    den = (1.0 - albedo[1:-1, 1:-1, 1:-1]) * sigma[1:-1, 1:-1, 1:-1] * dl2 + sden
    r = (num - p * den) / dl2
    # clamp at zero: over-relaxed undershoot must not turn the fluence
    # negative, which destabilizes the Knudsen feedback
    new_phi = np.maximum(omega * (num / den) + (1.0 - omega) * p, 0.0)
    res[1:-1, 1:-1, 1:-1][mask] = r[mask]
    p[mask] = new_phi[mask]


def fld_pass(phi, D, res, sigma, albedo, emission, dl, color, omega,
             eps_jbar, code, larsen_n):
    """One red or black relaxation pass of the flux-limited solver."""
    p, pxm, pxp, pym, pyp, pzm, pzp = _interior_views(phi)
    inv2 = 1.0 / (2.0 * dl)
    gx = (pxp - pxm) * inv2
    gy = (pyp - pym) * inv2
    gz = (pzp - pzm) * inv2
    gmag = np.sqrt(gx * gx + gy * gy + gz * gz)
    sig = sigma[1:-1, 1:-1, 1:-1]
    knud = np.maximum(gmag, eps_jbar) / np.maximum(sig * p, eps_jbar)
    f = evaluate_code(code, larsen_n, knud)
    d_new = f / sig
    _relax_color(phi, D, res, sigma, albedo, emission, dl, color, omega, d_new)


def cda_pass(phi, D, res, sigma, albedo, emission, dl, color, omega):
    """Classical-diffusion pass: fixed coefficient 1/(3 sigma), no limiter."""
    sig = sigma[1:-1, 1:-1, 1:-1]
    d_new = (1.0 / 3.0) / sig
    _relax_color(phi, D, res, sigma, albedo, emission, dl, color, omega, d_new)


def trilerp_points(a, dl, pts):
    """Clamped trilinear sampling of array ``a`` at world points (N, 3)."""
    ns = np.array(a.shape)
    u = pts / dl - 0.5
    uc = np.clip(u, 0.0, ns - 1.0)
    i0 = np.maximum(np.minimum(np.floor(uc).astype(np.intp), ns - 2), 0)
    f = uc - i0
    i1 = np.minimum(i0 + 1, ns - 1)
    x0, y0, z0 = i0[:, 0], i0[:, 1], i0[:, 2]
    x1, y1, z1 = i1[:, 0], i1[:, 1], i1[:, 2]
    fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
    c00 = a[x0, y0, z0] * (1 - fx) + a[x1, y0, z0] * fx
    c10 = a[x0, y1, z0] * (1 - fx) + a[x1, y1, z0] * fx
    c01 = a[x0, y0, z1] * (1 - fx) + a[x1, y0, z1] * fx
    c11 = a[x0, y1, z1] * (1 - fx) + a[x1, y1, z1] * fx
    return (c00 * (1 - fy) + c10 * fy) * (1 - fz) + (c01 * (1 - fy) + c11 * fy) * fz


def _exit_distance(origins, direction, box):
    """Distance to the box boundary along ``direction`` from interior points."""
    t = np.full(len(origins), np.inf)
    for ax in range(3):
        da = direction[ax]
        if abs(da) < 1e-12:
            continue
        bound = box[ax] if da > 0 else 0.0
        t = np.minimum(t, (bound - origins[:, ax]) / da)
    return np.maximum(t, 0.0)


def bake_dsm(sigma, dl, direction, step):
    """Per-voxel transmittance toward ``-direction`` (exp of minus optical depth).

    ``direction`` is the direction of photon travel; rays march the other way.
    """
    nx, ny, nz = sigma.shape
    box = np.array([nx * dl, ny * dl, nz * dl])
    d = -np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)
    ii, jj, kk = np.meshgrid(
        np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij"
    )
    origins = np.stack(
        [(ii.ravel() + 0.5) * dl, (jj.ravel() + 0.5) * dl, (kk.ravel() + 0.5) * dl],
        axis=1,
    )
    t_exit = _exit_distance(origins, d, box)
    n_full = np.floor(t_exit / step).astype(np.intp)
    tau = np.zeros(len(origins))
    for m in range(int(n_full.max()) if len(n_full) else 0):
        active = n_full > m
        pos = origins[active] + ((m + 0.5) * step) * d
        tau[active] += trilerp_points(sigma, dl, pos) * step
    rem = t_exit - n_full * step
    mid = origins + (n_full * step + 0.5 * rem)[:, None] * d
    tau += trilerp_points(sigma, dl, mid) * rem
    out = np.exp(-tau).reshape((nx, ny, nz))
    return np.asfortranarray(out)


def _ray_box(origins, dirs, box):
    """Slab intersection; returns (t_enter, t_exit) with t_enter>=0, inf if miss."""
    t0 = np.zeros(len(origins))
    t1 = np.full(len(origins), np.inf)
    for ax in range(3):
        da = dirs[:, ax]
        oa = origins[:, ax]
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (0.0 - oa) / da
            tb = (box[ax] - oa) / da
        lo = np.minimum(ta, tb)
        hi = np.maximum(ta, tb)
        par = np.abs(da) < 1e-15
        inside = (oa >= 0) & (oa <= box[ax])
        lo = np.where(par, np.where(inside, -np.inf, np.inf), lo)
        hi = np.where(par, np.where(inside, np.inf, -np.inf), hi)
        t0 = np.maximum(t0, lo)
        t1 = np.minimum(t1, hi)
    miss = t1 <= t0
    t0[miss] = 0.0
    t1[miss] = 0.0
    return t0, t1


def render_channel(sigma, albedo, emission, qri, phi, phi_dl, dl, step,
                   cam_pos, cam_right, cam_up, cam_fwd, tan_half_fov,
                   width, height, background):
    """Raymarch one color channel; returns an (height, width) radiance image.

    ``phi`` lives on its own grid with spacing ``phi_dl``; everything else
    shares the medium grid with spacing ``dl``.
    """
    nx, ny, nz = sigma.shape
    box = np.array([nx * dl, ny * dl, nz * dl])
    aspect = width / height
    px, py = np.meshgrid(np.arange(width), np.arange(height))
    u = (2.0 * (px.ravel() + 0.5) / width - 1.0) * tan_half_fov * aspect
    v = (1.0 - 2.0 * (py.ravel() + 0.5) / height) * tan_half_fov
    dirs = (
        cam_fwd[None, :] + u[:, None] * cam_right[None, :] + v[:, None] * cam_up[None, :]
    )
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    origins = np.broadcast_to(cam_pos, dirs.shape).copy()
    t0, t1 = _ray_box(origins, dirs, box)
    span = t1 - t0
    nseg = np.maximum(np.ceil(span / step).astype(np.intp), 1)
    nseg[span <= 0] = 0
    h = np.where(nseg > 0, span / np.maximum(nseg, 1), 0.0)
    radiance = np.zeros(len(dirs))
    trans = np.ones(len(dirs))
    inv4pi = 1.0 / (4.0 * np.pi)
    for m in range(int(nseg.max()) if len(nseg) else 0):
        active = nseg > m
        ha = h[active]
        tmid = t0[active] + (m + 0.5) * ha
        pos = origins[active] + tmid[:, None] * dirs[active]
        sig = trilerp_points(sigma, dl, pos)
        alb = trilerp_points(albedo, dl, pos)
        emi = trilerp_points(emission, dl, pos)
        qr = trilerp_points(qri, dl, pos)
        ph = trilerp_points(phi, phi_dl, pos)
        q = (qr + alb * sig * ph + emi) * inv4pi
        radiance[active] += trans[active] * np.exp(-0.5 * sig * ha) * q * ha
        trans[active] *= np.exp(-sig * ha)
    radiance += background * trans
    return radiance.reshape((height, width))
