import numpy as np
import pytest

from voldiff import HdrImage
from voldiff.imageio import read_pfm, read_ppm, rmse, write_pfm, write_ppm


def _image(w=5, h=3, seed=0):
    pix = np.random.default_rng(seed).random((h, w, 3)).astype(np.float32)
    return HdrImage(w, h, pix)


def test_pfm_roundtrip_bit_exact(tmp_path):
    img = _image()
    p = tmp_path / "img.pfm"
    write_pfm(p, img)
    back = read_pfm(p)
    assert (back.width, back.height) == (img.width, img.height)
    assert np.array_equal(back.pixels, img.pixels)


def test_pfm_header_format(tmp_path):
    img = _image(w=7, h=2)
    p = tmp_path / "img.pfm"
    write_pfm(p, img)
    raw = p.read_bytes()
    assert raw.startswith(b"PF\n7 2\n-1.0\n")


def test_pfm_rejects_grayscale(tmp_path):
    p = tmp_path / "gray.pfm"
    p.write_bytes(b"Pf\n2 2\n-1.0\n" + b"\0" * 16)
    with pytest.raises(ValueError):
        read_pfm(p)


def test_pfm_rejects_truncated(tmp_path):
    img = _image()
    p = tmp_path / "img.pfm"
    write_pfm(p, img)
    p.write_bytes(p.read_bytes()[:-4])
    with pytest.raises(ValueError):
        read_pfm(p)


def test_ppm_roundtrip(tmp_path):
    pix = np.random.default_rng(1).integers(0, 256, (4, 6, 3)).astype(np.uint8)
    p = tmp_path / "img.ppm"
    write_ppm(p, pix)
    assert p.read_bytes().startswith(b"P6\n6 4\n255\n")
    assert np.array_equal(read_ppm(p), pix)


def test_ppm_rejects_wrong_dtype(tmp_path):
    with pytest.raises(ValueError):
        write_ppm(tmp_path / "x.ppm", np.zeros((2, 2, 3)))


def test_rmse_identical_is_zero():
    img = _image()
    total, per = rmse(img, img)
    assert total == 0.0
    assert np.all(per == 0.0)


def test_rmse_constant_offset():
    # image vs itself shifted by constant c -> RMSE = c
    a = HdrImage(4, 4, np.full((4, 4, 3), 1.0, dtype=np.float32))
    b = HdrImage(4, 4, np.full((4, 4, 3), 3.0, dtype=np.float32))
    total, per = rmse(a, b)
    assert total == pytest.approx(2.0)
    assert np.allclose(per, 2.0)


def test_rmse_dimension_mismatch():
    with pytest.raises(ValueError):
        rmse(_image(4, 4), _image(5, 4))
