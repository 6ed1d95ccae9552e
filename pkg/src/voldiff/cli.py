"""Command-line pipeline: generate, bake, solve, render, pathtrace, validate.

Stages communicate through files: scene directories hold VGRD1 grids plus a
scene.txt manifest, and later stages read the artifacts of earlier ones.
Exit codes: 0 success, 1 validation failure, 2 usage or config error.

An optional flat ``key = value`` config file supplies defaults for any
command; explicit flags win over config values.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import __version__
from ._numba_support import set_num_threads
from .analytic import (
    PointSourceParams,
    cda_greens,
    fld_transport_point,
    grosjean_fluence,
    normalized_fluence,
    radial_profile,
)
from .grid import ScalarField, downsample, read_vgrd, write_vgrd
from .imageio import read_pfm, rmse, write_pfm, write_ppm
from .lightbake import bake_dsm, bake_qri, combine_sources
from .limiters import CDA, LEVERMORE_POMRANING, FluxLimiter
from .pathtrace import trace
from .render import render, tonemap
from .scenes import (
    CHANNELS,
    load_scene,
    make_nebulae,
    make_noise_sphere,
    make_point_source,
    read_kv,
    save_scene,
)
from .solver import SolverConfig, solve

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class ConfigError(Exception):
    pass


def _load_config(path):
    if path is None:
        return {}
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    return read_kv(path)


def _pick(flag_value, cfg, key, cast, default):
    """Flag beats config beats default."""
    if flag_value is not None:
        return flag_value
    if key in cfg:
        try:
            return cast(cfg[key])
        except ValueError as exc:
            raise ConfigError(f"bad config value for {key}: {cfg[key]!r}") from exc
    return default


def _read_channel_grids(directory, stem):
    paths = [os.path.join(directory, f"{stem}_{c}.vgrd") for c in CHANNELS]
    missing = [p for p in paths if not os.path.exists(p)]
    if missing:
        raise ConfigError(f"missing grid files: {', '.join(missing)}")
    return tuple(read_vgrd(p) for p in paths)


def _write_channel_grids(directory, stem, fields):
    os.makedirs(directory, exist_ok=True)
    for c, f in zip(CHANNELS, fields):
        write_vgrd(os.path.join(directory, f"{stem}_{c}.vgrd"), f)


def _write_image(out_dir, stem, img, exposure, gamma):
    os.makedirs(out_dir, exist_ok=True)
    write_pfm(os.path.join(out_dir, f"{stem}.pfm"), img)
    write_ppm(os.path.join(out_dir, f"{stem}.ppm"), tonemap(img, exposure, gamma))


def cmd_generate(args, cfg):
    out_dir = args.out_dir or f"scene_{args.scene}"
    if args.scene == "point-source":
        scene = make_point_source(args.res or 127, args.tau, args.albedo)
    elif args.scene == "noise-sphere":
        scene = make_noise_sphere(args.res or 51, seed=args.seed)
    else:
        scene = make_nebulae(args.res or 200, seed=args.seed, albedo=args.albedo)
    save_scene(scene, out_dir)
    print(f"wrote scene to {out_dir}")
    return EXIT_OK


def cmd_bake(args, cfg):
    scene = load_scene(args.scene_dir)
    out_dir = args.out_dir or args.scene_dir
    if scene.light is None:
        raise ConfigError("scene has no directional light to bake")
    step = _pick(args.step, cfg, "bake.step", float, None)
    dsm = bake_dsm(scene.sigma_t[0], scene.light, step=step)
    dsms = [dsm]
    for c in (1, 2):
        if scene.sigma_t[c].data is scene.sigma_t[0].data:
            dsms.append(dsm)
        else:
            dsms.append(bake_dsm(scene.sigma_t[c], scene.light, step=step))
    qris = []
    for c in range(3):
        sigma_s = ScalarField(
            scene.dims,
            np.asfortranarray(scene.sigma_t[c].data * scene.albedo[c].data),
        )
        qris.append(bake_qri(sigma_s, dsms[c], float(scene.light.radiance[c])))
    _write_channel_grids(out_dir, "dsm", dsms)
    _write_channel_grids(out_dir, "qri", qris)
    print(f"wrote dsm_* and qri_* grids to {out_dir}")
    return EXIT_OK


def _solver_config(args, cfg):
    limiter = FluxLimiter.from_name(
        _pick(args.limiter, cfg, "solver.limiter", str, "lp"))
    return SolverConfig(
        limiter=limiter,
        omega=_pick(args.omega, cfg, "solver.omega", float, 1.5),
        sigma_eps=_pick(None, cfg, "solver.sigma_eps", float, None),
        max_iters=_pick(args.max_iters, cfg, "solver.max_iters", int, 20000),
        precision=args.precision or cfg.get("solver.precision", "double"),
    )


def cmd_solve(args, cfg):
    scene = load_scene(args.scene_dir)
    out_dir = args.out_dir or args.scene_dir
    factor = _pick(args.downsample, cfg, "solver.downsample", int, 1)
    if factor < 1:
        raise ConfigError("downsample factor must be >= 1")
    config = _solver_config(args, cfg)
    qri = None
    if os.path.exists(os.path.join(args.scene_dir, "qri_r.vgrd")):
        qri = _read_channel_grids(args.scene_dir, "qri")
    phis = []
    histories = []
    failed = False
    for c in range(3):
        source = scene.emission[c]
        if qri is not None:
            source = combine_sources(qri[c], source)
        sig = downsample(scene.sigma_t[c].astype(np.float64), factor)
        alb = downsample(scene.albedo[c].astype(np.float64), factor)
        src = downsample(source.astype(np.float64), factor)
        result = solve(sig, alb, src, config)
        phis.append(result.phi.astype(np.float64))
        histories.append(result.residual_history)
        tag = "converged" if result.converged else "NOT CONVERGED"
        print(f"channel {CHANNELS[c]}: {result.iterations} iterations, "
              f"residual {result.residual_history[-1]:.3e} ({tag})")
        failed = failed or not result.converged
    _write_channel_grids(out_dir, "phi", phis)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "residual.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "residual_r", "residual_g", "residual_b"])
        for i in range(max(len(h) for h in histories)):
            w.writerow([i + 1] + [
                f"{h[i]:.9e}" if i < len(h) else "" for h in histories])
    print(f"wrote phi_* grids and residual.csv to {out_dir}")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_render(args, cfg):
    scene = load_scene(args.scene_dir)
    out_dir = args.out_dir or args.scene_dir
    qri = None
    if os.path.exists(os.path.join(args.scene_dir, "qri_r.vgrd")):
        qri = _read_channel_grids(args.scene_dir, "qri")
    phi = None
    if os.path.exists(os.path.join(args.scene_dir, "phi_r.vgrd")):
        phi = _read_channel_grids(args.scene_dir, "phi")
    scattering = any(np.any(a.data > 0) for a in scene.albedo)
    if phi is None and scattering:
        raise ConfigError(
            "scene scatters but no phi grids found; run the solve stage first")
    step = _pick(args.step, cfg, "render.step", float, None)
    img = render(scene.sigma_t, scene.albedo, scene.emission, qri, phi,
                 scene.camera, scene.background, step=step)
    exposure = _pick(args.exposure, cfg, "render.exposure", float, 1.0)
    gamma = _pick(args.gamma, cfg, "render.gamma", float, 2.2)
    _write_image(out_dir, "render", img, exposure, gamma)
    print(f"wrote render.pfm and render.ppm to {out_dir}")
    return EXIT_OK


def cmd_pathtrace(args, cfg):
    scene = load_scene(args.scene_dir)
    out_dir = args.out_dir or args.scene_dir
    spp = _pick(args.spp, cfg, "pathtrace.spp", int, 64)
    seed = _pick(args.seed, cfg, "pathtrace.seed", int, 0)
    max_bounces = _pick(args.max_bounces, cfg, "pathtrace.max_bounces", int, 256)
    img = trace(scene, spp=spp, max_bounces=max_bounces, seed=seed)
    exposure = _pick(args.exposure, cfg, "render.exposure", float, 1.0)
    gamma = _pick(args.gamma, cfg, "render.gamma", float, 2.2)
    _write_image(out_dir, "pathtrace", img, exposure, gamma)
    print(f"wrote pathtrace.pfm and pathtrace.ppm to {out_dir}")
    return EXIT_OK


def cmd_validate_point_source(args, cfg):
    if not 0.0 <= args.albedo <= 1.0:
        raise ConfigError("albedo must lie in [0, 1]")
    res = args.res
    scene = make_point_source(res, args.tau, args.albedo)
    params = PointSourceParams(sigma_t=args.tau, albedo=args.albedo)
    center = (res // 2,) * 3

    # each solve gets the exact solution of its own equation on the boundary,
    # so only interior discretization error enters the comparison
    def boundary_for(analytic):
        def boundary(points):
            r = np.linalg.norm(points - 0.5, axis=1)
            return analytic(params.sigma_t * r, params)
        return boundary

    checks = []
    profiles = {}
    for name, limiter, analytic in (("cda", CDA, cda_greens),
                                    ("fld", LEVERMORE_POMRANING, grosjean_fluence)):
        config = SolverConfig(limiter=limiter, omega=args.omega,
                              max_iters=args.max_iters,
                              precision=args.precision or "double")
        result = solve(scene.sigma_t[0], scene.albedo[0], scene.emission[0],
                       config, boundary_phi=boundary_for(analytic))
        checks.append((f"{name} converged", result.converged))
        tau, phi = radial_profile(result.phi, center, params.sigma_t, nbins=60)
        profiles[name] = (tau, phi)

    tau, phi = profiles["cda"]
    band = (tau >= 0.5) & (tau <= 3.0)
    ref = normalized_fluence(cda_greens(tau[band], params), params.sigma_t)
    rel = np.abs(phi[band] - ref) / ref
    checks.append(("cda matches diffusion theory within 10%", float(rel.max()) < 0.10))

    tau, phi = profiles["fld"]
    near = (tau >= 0.1) & (tau <= 0.4) & (phi > 0)
    slope = np.polyfit(np.log(tau[near]), np.log(phi[near]), 1)[0]
    checks.append(("fld near-field slope in [-2.3, -1.7]", -2.3 < slope < -1.7))

    out_dir = args.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    for name, (t, p) in profiles.items():
        with open(os.path.join(out_dir, f"profile_{name}.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["tau", "phi_tilde", "grosjean", "cda_theory", "ballistic"])
            for ti, pi in zip(t, p):
                w.writerow([
                    f"{ti:.9e}", f"{pi:.9e}",
                    f"{normalized_fluence(grosjean_fluence(ti, params), params.sigma_t):.9e}",
                    f"{normalized_fluence(cda_greens(ti, params), params.sigma_t):.9e}",
                    f"{normalized_fluence(fld_transport_point(ti, params), params.sigma_t):.9e}",
                ])

    ok = True
    for label, passed in checks:
        print(f"[{'PASS' if passed else 'FAIL'}] {label}")
        ok = ok and passed
    print(f"profiles written to {out_dir}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_compare(args, cfg):
    a = read_pfm(args.image_a)
    b = read_pfm(args.image_b)
    total, per_channel = rmse(a, b)
    print(f"rmse {total:.9e}")
    for c, v in zip(CHANNELS, per_channel):
        print(f"rmse_{c} {v:.9e}")
    return EXIT_OK


def _add_globals(parser, top=False):
    # On subparsers the defaults are suppressed so a flag given after the
    # subcommand does not clobber one given before it.
    kw = {} if top else {"default": argparse.SUPPRESS}
    parser.add_argument("--config", help="flat key=value config file", **kw)
    parser.add_argument("--out-dir", help="output directory", **kw)
    parser.add_argument("--threads", type=int, help="compute thread count", **kw)
    parser.add_argument("--precision", choices=("single", "double"), **kw)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="voldiff",
        description="Flux-limited diffusion pipeline for volumetric lighting.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    _add_globals(parser, top=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a procedural scene directory")
    _add_globals(p)
    p.add_argument("--scene", required=True,
                   choices=("point-source", "noise-sphere", "nebulae"))
    p.add_argument("--res", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tau", type=float, default=4.0,
                   help="optical depth across the grid (point-source)")
    p.add_argument("--albedo", type=float, default=0.9)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bake", help="bake light transmittance and first scatter")
    _add_globals(p)
    p.add_argument("scene_dir")
    p.add_argument("--step", type=float)
    p.set_defaults(func=cmd_bake)

    p = sub.add_parser("solve", help="solve the diffusion equation per channel")
    _add_globals(p)
    p.add_argument("scene_dir")
    p.add_argument("--limiter")
    p.add_argument("--omega", type=float)
    p.add_argument("--downsample", type=int)
    p.add_argument("--max-iters", type=int)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("render", help="raymarch the scene with the solved fluence")
    _add_globals(p)
    p.add_argument("scene_dir")
    p.add_argument("--step", type=float)
    p.add_argument("--exposure", type=float)
    p.add_argument("--gamma", type=float)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("pathtrace", help="path-trace a reference image")
    _add_globals(p)
    p.add_argument("scene_dir")
    p.add_argument("--spp", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-bounces", type=int)
    p.add_argument("--exposure", type=float)
    p.add_argument("--gamma", type=float)
    p.set_defaults(func=cmd_pathtrace)

    p = sub.add_parser("validate-point-source",
                       help="check the solvers against closed-form solutions")
    _add_globals(p)
    p.add_argument("--res", type=int, default=127)
    p.add_argument("--tau", type=float, default=4.0)
    p.add_argument("--albedo", type=float, default=0.8)
    p.add_argument("--omega", type=float, default=1.8)
    p.add_argument("--max-iters", type=int, default=20000)
    p.set_defaults(func=cmd_validate_point_source)

    p = sub.add_parser("compare", help="RMSE between two PFM images")
    _add_globals(p)
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads must be >= 1")
            set_num_threads(args.threads)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
