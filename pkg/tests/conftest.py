from __future__ import annotations

import numpy as np
import pytest

from dspin import curves as cv


@pytest.fixture(scope="session")
def c1():
    return cv.helix("const")


@pytest.fixture(scope="session")
def c2():
    return cv.helix("exp")


@pytest.fixture(scope="session")
def c3():
    return cv.helix("log")


@pytest.fixture(scope="session")
def viv_cyl():
    return cv.viviani("cylinder")


@pytest.fixture(scope="session")
def viv_sph():
    return cv.viviani("sphere")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
