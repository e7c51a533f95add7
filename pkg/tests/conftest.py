import dataclasses

import pytest

from splitbeam import default_config, run_experiment

FAST_GRID = {"nx": 512, "ny": 512, "dx": 3.0, "dy": 3.0, "x0": -312.0, "y0": -456.0}

SMALL_GRID = {"nx": 128, "ny": 128, "dx": 1.5, "dy": 1.5, "x0": -96.0, "y0": -96.0}


@pytest.fixture(scope="session")
def fast_config():
    """Default experiment on a 512x512 grid: same geometry, ~4x faster."""
    return default_config(grid=dict(FAST_GRID))


@pytest.fixture(scope="session")
def default_cfg():
    return default_config()


@pytest.fixture(scope="session")
def ct_default(default_cfg):
    return run_experiment(dataclasses.replace(default_cfg, mode="ct", branch="d1"))


@pytest.fixture(scope="session")
def st_default_d1(default_cfg):
    return run_experiment(dataclasses.replace(default_cfg, mode="st", branch="d1"))


@pytest.fixture(scope="session")
def st_default_d2(default_cfg):
    return run_experiment(dataclasses.replace(default_cfg, mode="st", branch="d2"))
