import numpy as np
import pytest

from hslimit.measures import DiscreteDensity, Grid


@pytest.fixture
def line400():
    return Grid.line(2.0, 400)


def box(grid, a, b, height=1.0):
    return DiscreteDensity.uniform(grid, a, b, height)


def random_density(grid, rng, bumps=3, cutoff=None):
    """Mixture of Gaussian bumps, unit mass; zero beyond |x| = cutoff * L if given."""
    x = grid.centers
    vals = np.zeros_like(x)
    for _ in range(bumps):
        c = rng.uniform(-0.5, 0.5) * grid.half_width
        w = rng.uniform(0.05, 0.3) * grid.half_width
        vals += rng.uniform(0.2, 1.0) * np.exp(-((x - c) / w) ** 2)
    if cutoff is not None:
        vals[np.abs(x) > cutoff * grid.half_width] = 0.0
    return DiscreteDensity.normalized(grid, vals)


BARENBLATT_C = (3 / (4 * np.sqrt(12))) ** (2 / 3)  # unit mass for m = 2, d = 1


def barenblatt_cells(grid, t):
    """Exact cell averages of t^(-1/3) (C - x^2 t^(-2/3) / 12)_+ (m = 2 Barenblatt)."""
    radius = np.sqrt(12 * BARENBLATT_C) * t ** (1 / 3)

    def antiderivative(x):
        x = np.clip(x, -radius, radius)
        return t ** (-1 / 3) * (BARENBLATT_C * x - x**3 * t ** (-2 / 3) / 36)

    e = grid.edges
    return DiscreteDensity(grid, (antiderivative(e[1:]) - antiderivative(e[:-1])) / grid.h)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request, capsys):
    """Print and collect one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def emit(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        lines.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return ok

    return emit


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
