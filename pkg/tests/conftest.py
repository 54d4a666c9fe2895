import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from splinefusion import pipeline  # noqa: E402
from splinefusion.config import ScenarioConfig, noncollocated_positions  # noqa: E402

# scoring stations shared by the end-to-end tests
STATIONS = [0.45, 0.9, 1.2, 1.35]

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


class Timed:
    """A cached pipeline product plus the wall time it took to build."""

    def __init__(self, fn):
        t0 = time.perf_counter()
        self.value = fn()
        self.seconds = time.perf_counter() - t0


def collocated_config(**overrides):
    return ScenarioConfig().replace(**overrides) if overrides else ScenarioConfig()


def noncollocated_config(**overrides):
    acc, strain = noncollocated_positions()
    return ScenarioConfig().replace(**{"sensors.accel_positions": acc,
                                       "sensors.strain_positions": strain, **overrides})


@pytest.fixture(scope="session")
def default_config():
    return ScenarioConfig()


@pytest.fixture(scope="session")
def clean_collocated():
    """Noise-free collocated simulation (truth on the 111-node grid)."""
    return Timed(lambda: pipeline.simulate_clean(ScenarioConfig()))


@pytest.fixture(scope="session")
def noisy_collocated(clean_collocated):
    return pipeline.simulate(ScenarioConfig(), clean_collocated.value)


@pytest.fixture(scope="session")
def noise_free_fusion(clean_collocated):
    """Collocated run with 0 % noise, fused with the default m = 7 basis."""
    cfg = collocated_config(**{"sampling.noise_accel_percent": 0.0,
                               "sampling.noise_strain_percent": 0.0})

    def run():
        data = pipeline.simulate(cfg, clean_collocated.value)
        return data, pipeline.fuse(cfg, data.accel, data.strain)

    out = Timed(run)
    out.config = cfg
    return out


def rng(seed=0):
    return np.random.default_rng(seed)
