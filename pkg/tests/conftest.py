import numpy as np
import pytest

from nchsolver import Field, GridGeometry, KernelSpec, make_cache, sample_kernel


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def geo8():
    return GridGeometry(8, 1.0)


@pytest.fixture
def geo16():
    return GridGeometry(16, 1.0)


@pytest.fixture
def cache8(geo8):
    return make_cache(geo8)


@pytest.fixture
def gaussian_kernel8(geo8):
    return sample_kernel(KernelSpec.gaussian(12.5, 10.0), geo8)


def random_field(geometry, rng, scale=1.0):
    return Field(geometry, scale * rng.uniform(-1.0, 1.0, size=(geometry.n, geometry.n)))
