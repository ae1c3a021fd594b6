import numpy as np
import pytest

from lglab.group import classify, named_matrix
from lglab.surface import make_round_sphere, make_self_intersecting_sphere

SUITE_GROUPS = ["r3", "nil3", "sol3:1", "h3", "h2xr", "nonuni:0.5,1"]
ADMISSIBLE = SUITE_GROUPS + ["sol3:2", "nonuni:1,0.3", "nonuni:-1,2"]
ALL_MODELS = ["r3", "nil3", "sol3:1", "sol3:2", "e2tilde:1", "h3", "nonuni:0,0", "nonuni:0.5,1"]

ACCEPTANCE_LINES = {}  # criterion number -> summary line


def record(n, ok, text):
    ACCEPTANCE_LINES[n] = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {text}"


def model_of(name):
    return classify(named_matrix(name))


@pytest.fixture(scope="session")
def round_mesh():
    return make_round_sphere((0.0, 0.0, 0.0), 0.2, 4)


@pytest.fixture(scope="session")
def unit_sphere():
    return make_round_sphere((0.0, 0.0, 0.0), 1.0, 3)


@pytest.fixture(scope="session")
def control_mesh():
    return make_self_intersecting_sphere(3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
