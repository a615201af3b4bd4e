import pytest

from sll import _kernels, thermo
from sll.geometry import build_grid, straight_nozzle_2d
from sll.solver import picard_solve
from sll.upstream import Profile, UpstreamData


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # jit compilation must never land inside a timed assertion
    _kernels.warmup()


@pytest.fixture(scope="session")
def gas2():
    return thermo.GasModel(kind="full_euler", gamma=2.0)


@pytest.fixture(scope="session")
def uniform_data():
    return UpstreamData(B=Profile.constant(1.0), S=Profile.constant(1.0))


@pytest.fixture(scope="session")
def sheared_data():
    return UpstreamData(B=Profile.quadratic(1.0, 0.05),
                        S=Profile.quadratic(1.0, -0.03))


@pytest.fixture(scope="session")
def uniform_solution(gas2, uniform_data):
    grid = build_grid(straight_nozzle_2d(), 48, 24, -10.0, 10.0)
    return picard_solve(None, uniform_data, gas2, 0.3, grid)
