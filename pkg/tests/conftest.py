import os

import numpy as np
import pytest
from hypothesis import settings

from conewave.cross_section import ConeGeometry, ShiftedSphere, SphereZeroPotential, build_spectrum

settings.register_profile("conewave", deadline=None, max_examples=25, derandomize=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "conewave"))


@pytest.fixture(scope="session")
def s2():
    return build_spectrum(ConeGeometry(3), SphereZeroPotential(2), 64)


@pytest.fixture(scope="session")
def s3():
    return build_spectrum(ConeGeometry(4), SphereZeroPotential(3), 64)


@pytest.fixture(scope="session")
def shifted2():
    """S^2 with every nu moved off the half-integers (nu_l = l + 0.8)."""
    return build_spectrum(ConeGeometry(3), ShiftedSphere(2, 0.3), 64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request, capsys):
    """Record and print the verdict line of one acceptance criterion."""
    def record(number: int, passed: bool, detail: str):
        _CRITERIA[number] = (bool(passed), detail)
        with capsys.disabled():
            print(f"\nCRITERION {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
