import numpy as np
import pytest

from sqbsde.paths import TimeGrid, simulate_brownian


@pytest.fixture
def small_bundle():
    return simulate_brownian(TimeGrid(1.0, 20), 4000, 1, seed=11)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
