import numpy as np
import pytest

from invdetect.dictionaries import anomaly_system, vaguelettes_integration, vaguelettes_radon
from invdetect.operators import ForwardOperator
from invdetect.sampling import make_uniform_grid, product_grid
from invdetect.wavelets import build_index_set_interval, build_index_set_square_2d, daubechies_cascade


@pytest.fixture(scope="session")
def db6():
    return daubechies_cascade(12, 12)


@pytest.fixture(scope="session")
def db4():
    return daubechies_cascade(8, 10)


@pytest.fixture(scope="session")
def unit_grid():
    return make_uniform_grid(0.0, 1.0, 2**15)


@pytest.fixture(scope="session")
def integration_system(db6, unit_grid):
    return vaguelettes_integration(db6, build_index_set_interval(db6, 6), unit_grid)


@pytest.fixture(scope="session")
def integration_anomalies(db6, unit_grid):
    op = ForwardOperator.integration(unit_grid)
    return anomaly_system(op, db6, build_index_set_interval(db6, 6))


def radon_operator(m=256, nt=256, nth=90):
    side = make_uniform_grid(-0.5, 0.5, m)
    r = 1 / np.sqrt(2)
    return ForwardOperator.radon(product_grid(side, side), make_uniform_grid(-r, r, nt), make_uniform_grid(0.0, np.pi, nth))


@pytest.fixture(scope="session")
def radon_fast_op():
    return radon_operator()


@pytest.fixture(scope="session")
def radon_system(db4, radon_fast_op):
    return vaguelettes_radon(db4, build_index_set_square_2d(db4, 3), radon_fast_op)


def pytest_terminal_summary(terminalreporter):
    import sys

    mods = [m for name, m in sys.modules.items() if name.endswith("test_acceptance")]
    lines = [line for m in mods for line in getattr(m, "RESULTS", [])]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
