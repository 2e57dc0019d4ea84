import warnings

import numpy as np
import pytest

from cfiebem.experiments import X0, fundamental_solution_trace, make_geometry, problem_data
from cfiebem.formulations import ConditionWarning
from cfiebem.geometry import build_initial_mesh, refine

ACCEPTANCE_LINES = []


def uniform_mesh(kind: str, n: int):
    """Uniformly refined mesh with ``n`` elements (n = 4 * 2^l or 6 * 2^l)."""
    mesh = build_initial_mesh(make_geometry(kind))
    while mesh.n_elements < n:
        mesh = refine(mesh, range(mesh.n_elements))
    assert mesh.n_elements == n
    return mesh


@pytest.fixture(autouse=True)
def _quiet_conditions():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConditionWarning)
        yield


@pytest.fixture(scope="session")
def circle():
    return make_geometry("circle")


@pytest.fixture(scope="session")
def lshape():
    return make_geometry("lshape")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def zero_data(geometry, k):
    from cfiebem.formulations import ProblemData

    return ProblemData(geometry, k, lambda p: np.zeros(len(p), dtype=complex), 1.0,
                       lambda p, n: np.zeros(len(p), dtype=complex))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


__all__ = ["uniform_mesh", "zero_data", "problem_data", "fundamental_solution_trace", "X0"]
