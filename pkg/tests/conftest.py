import numpy as np
import pytest

from voldiff import GridDims, ScalarField


@pytest.fixture
def small_dims():
    return GridDims(9, 9, 9, 1.0 / 9)


@pytest.fixture
def hot_voxel_fields(small_dims):
    """Homogeneous absorbing medium with a single emitting center voxel."""
    sigma = ScalarField.full(small_dims, 4.0)
    albedo = ScalarField.full(small_dims, 0.8)
    emission = ScalarField.zeros(small_dims)
    c = small_dims.nx // 2
    emission.data[c, c, c] = 1.0 / small_dims.dl**3
    return sigma, albedo, emission


def rng(seed=0):
    return np.random.default_rng(seed)
