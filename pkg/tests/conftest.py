import logging

import numpy as np
import pytest

from core.continuum import ElasticModuli
from core.fem import BodyLoads
from core.material import DamageLaw, MaterialParams
from core.mesh import Box, build_mesh


@pytest.fixture(autouse=True)
def reset_logger():
    yield
    logger = logging.getLogger("caving")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    logger.propagate = True


@pytest.fixture
def rock():
    return ElasticModuli(2.9e10, 0.3)


def make_params(model=1, w11=1e3, w1=1e6, ell=0.05, eta_r=1e-6, moduli=None, **law):
    return MaterialParams(
        moduli=moduli or ElasticModuli(2.9e10, 0.3),
        law=DamageLaw(model, w11, **law),
        w1=w1,
        ell=ell,
        eta_r=eta_r,
    )


@pytest.fixture
def unit_square():
    return build_mesh(Box(0.0, 1.0, 0.0, 1.0), 0.25, 0.25)


@pytest.fixture
def no_loads():
    return BodyLoads(kbar=1e9, self_weight=False, confinement=False)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
