import numpy as np
import pytest

from birange.collision import AxisGrid, BoundingBoxModel, TABLE_AXES, generate_table
from birange.config import FacilityConfig


@pytest.fixture(scope="session")
def cfg():
    return FacilityConfig()


@pytest.fixture(scope="session")
def model(cfg):
    return BoundingBoxModel.from_config(cfg)


@pytest.fixture(scope="session")
def coarse_table(cfg, model):
    """4-degree table: fast to build, dense enough for motion/service tests."""
    grids = {a: AxisGrid(cfg.limit(a)[0], cfg.limit(a)[1], 4.0) for a in TABLE_AXES}
    return generate_table(model, cfg, grids)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
