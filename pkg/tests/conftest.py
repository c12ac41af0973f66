import numpy as np
import pytest
from hypothesis import settings

from lspqe import SILVER, GridSpec, SystemGeometry, build_spectral_table

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def silver():
    return SILVER


@pytest.fixture(scope="session")
def n2_table_r8(silver):
    return build_spectral_table(silver, SystemGeometry(5.0, 8.0, 2))


@pytest.fixture(scope="session")
def n4_table_r8(silver):
    return build_spectral_table(silver, SystemGeometry(5.0, 8.0, 4))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
