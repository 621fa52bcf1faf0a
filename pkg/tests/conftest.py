import numpy as np
import pytest

from spdcsim import dispersion
from spdcsim.biphoton import SourceParams


@pytest.fixture(scope="session")
def bulk():
    return dispersion.bulk_lithium_niobate()


@pytest.fixture(scope="session")
def waveguide():
    return dispersion.engineered_waveguide()


@pytest.fixture
def params():
    return SourceParams()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE = {}


def record(criterion, passed, detail):
    ACCEPTANCE[criterion] = (passed, detail)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if passed else 'FAIL'}  {detail}")
