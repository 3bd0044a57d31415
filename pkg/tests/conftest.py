import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from deltalab import (  # noqa: E402
    BallDomain,
    BoundaryCondition,
    RadialPotential,
    SquareWell,
    build_graded_grid,
    tune_resonance,
)


def resonance_grid(a=1.0, panels=40, order=10):
    return build_graded_grid(panels, order, a, a / panels)


@pytest.fixture(scope="session")
def well():
    return RadialPotential(SquareWell())


@pytest.fixture(scope="session")
def resonance(well):
    return tune_resonance(well, resonance_grid())


@pytest.fixture(scope="session")
def dirichlet5():
    return BallDomain(5.0, BoundaryCondition.dirichlet())


@pytest.fixture(scope="session")
def robin5():
    return BallDomain(5.0, BoundaryCondition.robin(2.0))


@pytest.fixture(scope="session")
def uniform_density():
    return RadialPotential(SquareWell(depth=3 / (4 * math.pi)))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
