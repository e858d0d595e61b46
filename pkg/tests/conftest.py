import numpy as np
import pytest

from nonlocal_stefan.evolution import KernelSpec, SimConfig
from nonlocal_stefan.grid import Field, Grid

ACCEPTANCE_LINES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running integration runs")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def box(grid, lower, upper, value):
    """Piecewise-constant value on [lower, upper] (1D) or the square [lower, upper]^2."""
    tol = 1e-9 * grid.spacing
    inside = np.ones(grid.shape, dtype=bool)
    for x in grid.coordinates():
        inside &= (x >= lower - tol) & (x <= upper + tol)
    return np.where(inside, float(value), 0.0)


def interval(grid, lower, upper, value):
    x = grid.coordinates()[0]
    tol = 1e-9 * grid.spacing
    return np.where((x >= lower - tol) & (x <= upper + tol), float(value), 0.0)


@pytest.fixture
def line():
    return Grid.line(-10.0, 10.0, 0.05)


@pytest.fixture
def plateau(line):
    """3 on [-1, 1]: the reference scenario."""
    return Field(line, interval(line, -1, 1, 3.0))


@pytest.fixture
def tent_cfg():
    return SimConfig(KernelSpec("tent", 1.0), dt=0.1, t_end=5.0)


def random_field(rng, grid, count=3, span=3.0, height=3.0):
    """Sum of random signed boxes near the origin."""
    vals = np.zeros(grid.shape)
    coords = grid.coordinates()
    for _ in range(count):
        a = rng.uniform(-span, span - 0.5, size=grid.dim)
        b = a + rng.uniform(0.3, 2.0, size=grid.dim)
        mask = np.ones(grid.shape, dtype=bool)
        for x, p, q in zip(coords, a, np.minimum(b, span)):
            mask &= (x >= p) & (x <= q)
        vals += np.where(mask, rng.uniform(-height, height), 0.0)
    return Field(grid, vals)


LOSS_GRID = Grid.line(-34.0, 34.0, 0.1)


def loss_scenario(depth=1.2):
    """Plateau 5 on [-4, 4] plus a dip -depth on [6, 6.5]; meant for R_J = 8."""
    g = LOSS_GRID
    return Field(g, interval(g, -4, 4, 5.0) - interval(g, 6, 6.5, depth))


def loss_config(**kw):
    base = dict(kernel=KernelSpec("tent", 8.0), dt=0.1, t_end=1.0)
    base.update(kw)
    return SimConfig(**base)
