import numpy as np
import pytest

from sdidkit.panel import Panel, panel_from_matrix

ACCEPTANCE_LINES: list[str] = []


def random_panel(rng: np.random.Generator, max_n: int = 20, max_t: int = 12) -> Panel:
    """Random block panel with N <= max_n, T <= max_t and at least one of each block."""
    N = int(rng.integers(2, max_n + 1))
    T = int(rng.integers(2, max_t + 1))
    n1 = int(rng.integers(1, N))
    t0 = int(rng.integers(1, T))
    Y = rng.normal(size=(N, T)) * rng.uniform(0.5, 5) + rng.normal() * 10
    return panel_from_matrix(Y, n_treated=n1, n_pre=t0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
