import time

import numpy as np
import pytest

from porohyst import config
from porohyst.solver import Simulation


def run_preset(name, **overrides):
    cfg = config.from_preset(name, **overrides)
    t0 = time.perf_counter()
    sim = Simulation(cfg.params, cfg.solver)
    res = sim.run(data=cfg.initial_data())
    res.elapsed = time.perf_counter() - t0
    return sim, res


@pytest.fixture(scope="session")
def smooth_1d():
    return run_preset("smooth_1d")


@pytest.fixture(scope="session")
def smooth_2d():
    return run_preset("smooth_2d")


@pytest.fixture(scope="session")
def short_1d():
    return run_preset("smooth_1d", solver__t_end=0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
