import numpy as np
import pytest

from nlch.grid import Grid
from nlch.kernel import build_kernel


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid1():
    return Grid(1, 64)


@pytest.fixture
def grid2():
    return Grid(2, 32)


@pytest.fixture
def k1(grid1):
    return build_kernel("poly_bump", 0.1, grid1)


@pytest.fixture
def k2(grid2):
    return build_kernel("poly_bump", 0.1, grid2)


_AC_LINES = pytest.StashKey[list]()


@pytest.fixture
def ac_report(request):
    """Record one pass/fail line per acceptance criterion; printed in the terminal summary."""
    lines = request.config.stash.setdefault(_AC_LINES, [])

    def report(label, passed, detail):
        line = f"{label:<6} {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        lines.append(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_AC_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s[2:6].split()[0])):
            terminalreporter.write_line(line)
