import numpy as np
import pytest

from gsscrit.core import ModelSpec
from gsscrit.dcurve import curve_grid
from gsscrit.dynamics import dynamics_grid
from gsscrit.profiles import ProfileFamily

OMEGA_STAR = float(np.sqrt(0.5))

_ACCEPTANCE = {}


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {number:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    _ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])


@pytest.fixture(scope="session")
def nlkg3():
    return ModelSpec.nlkg(3)


@pytest.fixture(scope="session")
def omega_star():
    return OMEGA_STAR


@pytest.fixture(scope="session")
def curve_family(nlkg3):
    """Profiles on one grid covering omega in [0.1, 0.9] plus stencil margins."""
    grid = curve_grid(nlkg3, [0.09, 0.91])
    return ProfileFamily(nlkg3, grid, tol=1e-11)


@pytest.fixture(scope="session")
def star_family(nlkg3):
    """Dynamics-resolution family around the degenerate frequency."""
    return ProfileFamily(nlkg3, dynamics_grid(nlkg3, OMEGA_STAR), tol=1e-11)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)
