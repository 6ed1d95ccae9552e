"""HDR (PFM) and 8-bit (PPM P6) image writers and readers.

PFM: color "PF" header, scale -1.0 (little-endian float32), rows stored
bottom-to-top.  Both writers are deterministic and round-trip bit-exactly.
"""

from __future__ import annotations

import numpy as np

from .render import HdrImage


def write_pfm(path, img: HdrImage):
    data = np.asarray(img.pixels, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(f"PF\n{img.width} {img.height}\n-1.0\n".encode("ascii"))
        fh.write(data[::-1, :, :].tobytes())


def read_pfm(path) -> HdrImage:
    with open(path, "rb") as fh:
        header = fh.readline().strip()
        if header != b"PF":
            raise ValueError(f"{path}: not a color PFM file")
        width, height = (int(tok) for tok in fh.readline().split())
        scale = float(fh.readline())
        count = width * height * 3
        raw = fh.read(4 * count)
        if len(raw) != 4 * count:
            raise ValueError(f"{path}: truncated PFM payload")
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(raw, dtype=dtype).reshape((height, width, 3))
    return HdrImage(width, height, data[::-1, :, :].astype(np.float32))


def write_ppm(path, pixels: np.ndarray):
    """Write an (H, W, 3) uint8 array as binary PPM."""
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise ValueError("expected an (H, W, 3) uint8 array")
    h, w = pixels.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"P6":
            raise ValueError(f"{path}: not a binary PPM file")
        line = fh.readline()
        while line.startswith(b"#"):
            line = fh.readline()
        w, h = (int(tok) for tok in line.split())
        maxval = int(fh.readline())
        if maxval != 255:
            raise ValueError("only 8-bit PPM supported")
        raw = fh.read(w * h * 3)
    return np.frombuffer(raw, dtype=np.uint8).reshape((h, w, 3)).copy()


def rmse(a: HdrImage, b: HdrImage):
    """Root-mean-square difference in linear HDR, total and per channel."""
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError("image dimensions differ")
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    per_channel = np.sqrt(np.mean(diff * diff, axis=(0, 1)))
    total = float(np.sqrt(np.mean(diff * diff)))
    return total, per_channel
