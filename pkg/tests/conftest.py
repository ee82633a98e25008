from __future__ import annotations

import numpy as np
import pytest

from helpers import SEED
from snbump.radial import compute_ground_state

ACCEPTANCE: dict = {}


@pytest.fixture(scope="session")
def gs():
    return compute_ground_state(1e-3, 60.0)


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
