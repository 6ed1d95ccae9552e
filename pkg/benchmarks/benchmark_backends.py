"""Compare the compiled and pure-numpy kernel backends.

Both implementations are imported side by side and timed on the same
inputs, so this also doubles as a consistency check.  Run directly:

    python3 benchmarks/benchmark_backends.py [--res 64] [--iters 50]
"""

import argparse
import time

import numpy as np

from voldiff import _kernels_numpy
from voldiff._numba_support import NUMBA_ENABLED
from voldiff.limiters import CODE_LP
from voldiff.scenes import make_noise_sphere


def _time(fn, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _solver_state(scene, dtype=np.float64):
    dims = scene.dims
    sig = np.asfortranarray(np.maximum(scene.sigma_t[0].data, 1e-3).astype(dtype))
    alb = np.asfortranarray(scene.albedo[0].data.astype(dtype))
    emi = np.asfortranarray(scene.emission[0].data.astype(dtype))
    jbar = float(np.sqrt(np.mean(np.square(emi, dtype=np.float64))))
    phi = np.full(dims.shape, 1e-20 * jbar * dims.dl, dtype=dtype, order="F")
    dco = np.full(dims.shape, 1e-20 * dims.dl, dtype=dtype, order="F")
    res = np.zeros(dims.shape, dtype=dtype, order="F")
    return sig, alb, emi, phi, dco, res, jbar, dims.dl


def bench_fld(impl, scene, iters):
    sig, alb, emi, phi, dco, res, jbar, dl = _solver_state(scene)

    def run():
        for _ in range(iters):
            for color in (0, 1):
                impl.fld_pass(phi, dco, res, sig, alb, emi, dl, color,
                              1.5, 1e-20 * jbar, CODE_LP, 2.0)

    return _time(run), phi


def bench_bake(impl, scene):
    sig = np.asfortranarray(scene.sigma_t[0].data.astype(np.float64))
    direction = np.array([-0.45, -0.8, 0.4])
    direction /= np.linalg.norm(direction)
    out = {}

    def run():
        out["t"] = impl.bake_dsm(sig, scene.dims.dl, direction, scene.dims.dl / 2)

    return _time(run), out["t"]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--res", type=int, default=64)
    ap.add_argument("--iters", type=int, default=50)
    args = ap.parse_args()

    scene = make_noise_sphere(max(args.res, 16), seed=0)
    rows = []

    t_np, phi_np = bench_fld(_kernels_numpy, scene, args.iters)
    rows.append(("solver pass x%d" % args.iters, "numpy", t_np, ""))
    t_np_bake, dsm_np = bench_bake(_kernels_numpy, scene)
    rows.append(("shadow-map bake", "numpy", t_np_bake, ""))

    if NUMBA_ENABLED:
        from voldiff import _kernels_numba

        bench_fld(_kernels_numba, scene, 1)  # warm up the JIT
        t_nb, phi_nb = bench_fld(_kernels_numba, scene, args.iters)
        err = np.max(np.abs(phi_nb - phi_np) / np.maximum(np.abs(phi_np), 1e-300))
        rows.append(("solver pass x%d" % args.iters, "numba", t_nb,
                     f"speedup {t_np / t_nb:.1f}x, max rel diff {err:.1e}"))
        bench_bake(_kernels_numba, scene)
        t_nb_bake, dsm_nb = bench_bake(_kernels_numba, scene)
        err = np.max(np.abs(dsm_nb - dsm_np))
        rows.append(("shadow-map bake", "numba", t_nb_bake,
                     f"speedup {t_np_bake / t_nb_bake:.1f}x, max abs diff {err:.1e}"))
    else:
        print("numba unavailable or disabled; timing the numpy backend only")

    print(f"\ngrid {scene.dims.nx}^3")
    for name, backend, t, note in rows:
        print(f"{name:>20}  {backend:>6}  {t * 1e3:9.1f} ms  {note}")


if __name__ == "__main__":
    main()
