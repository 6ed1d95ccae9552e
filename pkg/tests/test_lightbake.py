import math

import numpy as np
import pytest

from voldiff import GridDims, ScalarField
from voldiff.lightbake import DirectionalLight, bake_dsm, bake_qri, combine_sources


def _light(direction, radiance=(1.0, 1.0, 1.0)):
    d = np.asarray(direction, dtype=np.float64)
    return DirectionalLight(radiance=np.asarray(radiance), direction=d / np.linalg.norm(d))


def test_light_validation():
    with pytest.raises(ValueError):
        DirectionalLight(radiance=np.array([1.0, 1.0, 1.0]),
                         direction=np.array([0.0, 0.0, 0.5]))
    with pytest.raises(ValueError):
        DirectionalLight(radiance=np.array([-1.0, 0.0, 0.0]),
                         direction=np.array([0.0, 0.0, 1.0]))


def test_vacuum_transmittance_is_one():
    d = GridDims(8, 8, 8, 0.125)
    t = bake_dsm(ScalarField.zeros(d), _light((0, 0, 1)))
    assert np.allclose(t.data, 1.0)


def test_homogeneous_axis_aligned_beer_lambert():
    # light travelling +x: voxel i sees optical depth sigma * (i + 0.5) * dl
    n, sigma = 16, 3.0
    d = GridDims(n, n, n, 1.0 / n)
    t = bake_dsm(ScalarField.full(d, sigma), _light((1, 0, 0)))
    for i in (0, 5, 12):
        expect = math.exp(-sigma * (i + 0.5) * d.dl)
        assert t.data[i, 7, 7] == pytest.approx(expect, rel=1e-6)


def test_oblique_direction_homogeneous():
    n, sigma = 16, 2.0
    d = GridDims(n, n, n, 1.0 / n)
    light = _light((1, 1, 0))
    t = bake_dsm(ScalarField.full(d, sigma), light)
    # distance from center voxel to the boundary along -direction
    p = d.voxel_center(8, 8, 8)
    step = -light.direction
    dist = min((p[0] - 0.0) / -step[0] if step[0] < 0 else np.inf,
               (p[1] - 0.0) / -step[1] if step[1] < 0 else np.inf)
    assert t.data[8, 8, 8] == pytest.approx(math.exp(-sigma * dist), rel=1e-6)


def test_transmittance_monotone_along_light_axis():
    n = 12
    d = GridDims(n, n, n, 1.0 / n)
    rng = np.random.default_rng(0)
    sigma = ScalarField(d, rng.random(d.shape) * 5.0)
    t = bake_dsm(sigma, _light((0, 1, 0)))
    col = t.data[4, :, 7]
    assert np.all(np.diff(col) <= 1e-12)  # deeper voxels see more extinction
    assert np.all((t.data > 0) & (t.data <= 1.0))


def test_qri_product_and_dims():
    d = GridDims(8, 8, 8, 0.125)
    sigma_s = ScalarField.full(d, 2.0)
    trans = ScalarField.full(d, 0.5)
    q = bake_qri(sigma_s, trans, radiance=3.0)
    assert np.allclose(q.data, 3.0)
    with pytest.raises(ValueError):
        bake_qri(sigma_s, ScalarField.full(GridDims(4, 4, 4, 0.25), 1.0), 1.0)


def test_combine_sources_adds():
    d = GridDims(4, 4, 4, 0.25)
    a = ScalarField.full(d, 1.5)
    b = ScalarField.full(d, 0.5)
    assert np.allclose(combine_sources(a, b).data, 2.0)
