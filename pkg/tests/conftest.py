import pytest

from sublinear_minkowski import SolverConfig, disk, square, solve_body


@pytest.fixture(scope="session")
def cfg():
    return SolverConfig(beta=0.5, mesh_h=0.02)


@pytest.fixture(scope="session")
def disk_field(cfg):
    return solve_body(disk(), cfg)


@pytest.fixture(scope="session")
def square_field(cfg):
    return solve_body(square(), cfg)
