import numpy as np
import pytest

from maho_rd.audits import random_spec, sample_allocation
from maho_rd.source_model import SourceSpec, ceo_spec, ci_spec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ceo3():
    return ceo_spec(3, 1.0, 1.0)


@pytest.fixture
def ci2():
    return ci_spec(2, [1.0, 1.0], 1.0)


@pytest.fixture
def ts3():
    return SourceSpec(3, 1.0, [0.1, 0.2, 1.0], [1.0, 1.0, 1.0])


def spec_and_alloc(rng, big_l, boundary, condz=False):
    spec = random_spec(rng, big_l, condz)
    d = rng.uniform(0.2, 1.0)
    return spec, d, sample_allocation(spec, d, rng, boundary)
