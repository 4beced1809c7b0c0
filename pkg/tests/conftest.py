import os

import numpy as np
import pytest

from spectral_boltzmann.grid import build_phase_space
from spectral_boltzmann.model import GasModel, SpeciesLevel, build_collision_catalog
from spectral_boltzmann.weights import QuadratureRule, precompute_tables

NE = SpeciesLevel("Ne", 3.35e-26, 2.77e-10)
AR = SpeciesLevel("Ar", 6.63e-26, 4.17e-10)
M_AR = 6.63e-26


def pytest_configure(config):
    config.addinivalue_line("markers", "long: multi-hour runs, enabled by SB_LONG_TESTS=1")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("SB_LONG_TESTS"):
        return
    skip = pytest.mark.skip(reason="set SB_LONG_TESTS=1 to run")
    for item in items:
        if "long" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(autouse=True, scope="session")
def _weight_cache(tmp_path_factory):
    os.environ["SPECTRAL_BOLTZMANN_CACHE"] = str(tmp_path_factory.mktemp("weights"))


@pytest.fixture(scope="session")
def ne_ar():
    return GasModel.hard_sphere_mixture([NE, AR])


@pytest.fixture(scope="session")
def two_level():
    return GasModel.multilevel(M_AR, 3.0e-10, [1, 1], [0.0, 4.14e-21], ["l1", "l2"])


@pytest.fixture(scope="session")
def three_level():
    return GasModel.multilevel(M_AR, 3.0e-10, [1, 2, 1], [0.0, 4.0e-21, 9.0e-21])


@pytest.fixture(scope="session")
def phase8():
    return build_phase_space(8, 2000.0)


@pytest.fixture(scope="session")
def tables_ne_ar8(phase8, ne_ar):
    return precompute_tables(phase8, build_collision_catalog(ne_ar), ne_ar, QuadratureRule())


@pytest.fixture(scope="session")
def tables_2l8(phase8, two_level):
    return precompute_tables(phase8, build_collision_catalog(two_level), two_level,
                             QuadratureRule())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
