"""Uniform 3D scalar fields: indexing, sampling, difference operators, I/O.

Fields live on a regular voxel grid with edge length ``dl``.  The voxel
(i, j, k) has its center at ((i+0.5)dl, (j+0.5)dl, (k+0.5)dl), so the grid
spans the box [0, nx*dl] x [0, ny*dl] x [0, nz*dl].  Data is stored
x-fastest (Fortran order) so the stencil solver walks contiguous memory.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

VGRD_MAGIC = b"VGRD0001"


@dataclass(frozen=True)
class GridDims:
    nx: int
    ny: int
    nz: int
    dl: float

    def __post_init__(self):
        if min(self.nx, self.ny, self.nz) < 3:
            raise ValueError("grid needs at least 3 voxels per axis")
        if not self.dl > 0:
            raise ValueError("voxel edge length must be positive")

    @property
    def shape(self):
        return (self.nx, self.ny, self.nz)

    @property
    def n_voxels(self):
        return self.nx * self.ny * self.nz

    @property
    def extent(self):
        """Physical box size per axis."""
        return (self.nx * self.dl, self.ny * self.dl, self.nz * self.dl)

    def voxel_center(self, i, j, k):
        return np.array([(i + 0.5) * self.dl, (j + 0.5) * self.dl, (k + 0.5) * self.dl])


@dataclass
class ScalarField:
    dims: GridDims
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.data.shape != self.dims.shape:
            raise ValueError(
                f"data shape {self.data.shape} != grid shape {self.dims.shape}"
            )
        if not self.data.flags.f_contiguous:
            self.data = np.asfortranarray(self.data)

    @classmethod
    def full(cls, dims, value, dtype=np.float64):
        return cls(dims, np.full(dims.shape, value, dtype=dtype, order="F"))

    @classmethod
    def zeros(cls, dims, dtype=np.float64):
        return cls.full(dims, 0.0, dtype=dtype)

    @classmethod
    def from_function(cls, dims, fn, dtype=np.float64):
        """Sample ``fn(x, y, z)`` (vectorized, world coords) at voxel centers."""
        xs = (np.arange(dims.nx) + 0.5) * dims.dl
        ys = (np.arange(dims.ny) + 0.5) * dims.dl
        zs = (np.arange(dims.nz) + 0.5) * dims.dl
        gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
        return cls(dims, np.asfortranarray(fn(gx, gy, gz).astype(dtype)))

    def copy(self):
        return ScalarField(self.dims, self.data.copy(order="F"))

    def astype(self, dtype):
        return ScalarField(self.dims, np.asfortranarray(self.data.astype(dtype)))

    def check_finite(self):
        if not np.all(np.isfinite(self.data)):
            raise ValueError("field contains non-finite values")


def rms(field: ScalarField) -> float:
    """Root mean square over all voxels."""
    return float(np.sqrt(np.mean(np.square(field.data, dtype=np.float64))))


def central_gradient(field: ScalarField, p) -> np.ndarray:
    """Centered difference gradient at interior voxel ``p = (i, j, k)``."""
    i, j, k = p
    d = field.dims
    if not (0 < i < d.nx - 1 and 0 < j < d.ny - 1 and 0 < k < d.nz - 1):
        raise ValueError(f"voxel {p} is not interior")
    a = field.data
    inv = 1.0 / (2.0 * d.dl)
    return np.array(
        [
            (a[i + 1, j, k] - a[i - 1, j, k]) * inv,
            (a[i, j + 1, k] - a[i, j - 1, k]) * inv,
            (a[i, j, k + 1] - a[i, j, k - 1]) * inv,
        ]
    )


def downsample(field: ScalarField, factor: int) -> ScalarField:
    """Block-mean coarsening; trailing partial blocks average their members."""
    if factor < 1:
        raise ValueError("downsample factor must be >= 1")
    if factor == 1:
        return field.copy()
    d = field.dims
    cnx = -(-d.nx // factor)
    cny = -(-d.ny // factor)
    cnz = -(-d.nz // factor)
    out = np.empty((cnx, cny, cnz), dtype=field.data.dtype, order="F")
    a = field.data
    for k in range(cnz):
        for j in range(cny):
            for i in range(cnx):
                block = a[
                    i * factor : (i + 1) * factor,
                    j * factor : (j + 1) * factor,
                    k * factor : (k + 1) * factor,
                ]
                out[i, j, k] = block.mean()
    return ScalarField(GridDims(cnx, cny, cnz, d.dl * factor), out)


def upsample_replicate(field: ScalarField, factor: int) -> ScalarField:
    """Nearest-neighbor refinement; inverse-shape companion of downsample."""
    if factor < 1:
        raise ValueError("upsample factor must be >= 1")
    d = field.dims
    rep = np.repeat(np.repeat(np.repeat(field.data, factor, 0), factor, 1), factor, 2)
    return ScalarField(
        GridDims(d.nx * factor, d.ny * factor, d.nz * factor, d.dl / factor),
        np.asfortranarray(rep),
    )


def trilinear_sample(field: ScalarField, x) -> float | np.ndarray:
    """Trilinear interpolation at world position(s) ``x``, clamped to edge.

    ``x`` may be a single 3-vector or an (..., 3) array.
    """
    d = field.dims
    pts = np.asarray(x, dtype=np.float64)
    scalar_in = pts.ndim == 1
    pts = np.atleast_2d(pts)
    u = pts / d.dl - 0.5
    out = np.empty(len(u), dtype=np.float64)
    a = field.data
    ns = np.array([d.nx, d.ny, d.nz])
    uc = np.clip(u, 0.0, ns - 1.0)
    i0 = np.minimum(np.floor(uc).astype(np.intp), ns - 2)
    i0 = np.maximum(i0, 0)
    f = uc - i0
    i1 = np.minimum(i0 + 1, ns - 1)
    x0, y0, z0 = i0[:, 0], i0[:, 1], i0[:, 2]
    x1, y1, z1 = i1[:, 0], i1[:, 1], i1[:, 2]
    fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
    c00 = a[x0, y0, z0] * (1 - fx) + a[x1, y0, z0] * fx
    c10 = a[x0, y1, z0] * (1 - fx) + a[x1, y1, z0] * fx
    c01 = a[x0, y0, z1] * (1 - fx) + a[x1, y0, z1] * fx
    c11 = a[x0, y1, z1] * (1 - fx) + a[x1, y1, z1] * fx
    out = (c00 * (1 - fy) + c10 * fy) * (1 - fz) + (c01 * (1 - fy) + c11 * fy) * fz
    return float(out[0]) if scalar_in else out


def write_vgrd(path, field: ScalarField):
    """Write the binary VGRD1 voxel format (float32 payload, x-fastest)."""
    d = field.dims
    with open(path, "wb") as fh:
        fh.write(VGRD_MAGIC)
        fh.write(struct.pack("<IIId", d.nx, d.ny, d.nz, d.dl))
        fh.write(np.ascontiguousarray(field.data.ravel(order="F"), dtype="<f4").tobytes())


def read_vgrd(path) -> ScalarField:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != VGRD_MAGIC:
            raise ValueError(f"{path}: not a VGRD1 file (magic {magic!r})")
        nx, ny, nz, dl = struct.unpack("<IIId", fh.read(20))
        n = nx * ny * nz
        raw = fh.read(4 * n)
        if len(raw) != 4 * n:
            raise ValueError(f"{path}: truncated payload")
        data = np.frombuffer(raw, dtype="<f4").astype(np.float32)
    dims = GridDims(nx, ny, nz, dl)
    return ScalarField(dims, data.reshape(dims.shape, order="F"))
