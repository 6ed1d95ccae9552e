"""voldiff: flux-limited diffusion of multiply-scattered light on voxel grids.

The library covers the full pipeline: procedural scene generation, baking of
directional-light shadow maps, a red-black SOR relaxation of the nonlinear
diffusion equation with selectable flux limiters, a primary-ray renderer that
composes the resulting fluence field, and a ground-truth volumetric path
tracer for validation.
"""

from ._numba_support import NUMBA_ENABLED
from .analytic import (
    PointSourceParams,
    cda_greens,
    fld_transport_point,
    grosjean_fluence,
    grosjean_knudsen,
    normalized_fluence,
    radial_profile,
)
from .grid import (
    GridDims,
    ScalarField,
    central_gradient,
    downsample,
    read_vgrd,
    rms,
    trilinear_sample,
    upsample_replicate,
    write_vgrd,
)
from .imageio import read_pfm, read_ppm, rmse, write_pfm, write_ppm
from .lightbake import DirectionalLight, bake_dsm, bake_qri, combine_sources
from .limiters import (
    CDA,
    KERSHAW,
    LARSEN2,
    LEVERMORE_POMRANING,
    MAX,
    SUM,
    TABLE_LIMITERS,
    FluxLimiter,
    evaluate,
)
from .pathtrace import estimate_fluence, trace, woodcock_sample
from .render import Camera, HdrImage, render, tonemap, transmittance
from .scenes import (
    Scene,
    load_scene,
    make_nebulae,
    make_noise_sphere,
    make_point_source,
    save_scene,
)
from .solver import SolveResult, SolverConfig, flux, solve

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED",
    "PointSourceParams",
    "cda_greens",
    "fld_transport_point",
    "grosjean_fluence",
    "grosjean_knudsen",
    "normalized_fluence",
    "radial_profile",
    "GridDims",
    "ScalarField",
    "central_gradient",
    "downsample",
    "read_vgrd",
    "rms",
    "trilinear_sample",
    "upsample_replicate",
    "write_vgrd",
    "read_pfm",
    "read_ppm",
    "rmse",
    "write_pfm",
    "write_ppm",
    "DirectionalLight",
    "bake_dsm",
    "bake_qri",
    "combine_sources",
    "CDA",
    "KERSHAW",
    "LARSEN2",
    "LEVERMORE_POMRANING",
    "MAX",
    "SUM",
    "TABLE_LIMITERS",
    "FluxLimiter",
    "evaluate",
    "estimate_fluence",
    "trace",
    "woodcock_sample",
    "Camera",
    "HdrImage",
    "render",
    "tonemap",
    "transmittance",
    "Scene",
    "load_scene",
    "make_nebulae",
    "make_noise_sphere",
    "make_point_source",
    "save_scene",
    "SolveResult",
    "SolverConfig",
    "flux",
    "solve",
]
