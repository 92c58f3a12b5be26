from pathlib import Path

import numpy as np
import pytest

import lowrank_newton
from lowrank_newton.poly import parse_poly, parse_system

DATA = Path(lowrank_newton.__file__).parent / "data"

EXAMPLE1_X0 = [-0.25518, -0.60376, -0.020624]
EXAMPLE1_FINAL = [-0.234036969240715, -0.544684891672585, -0.020211408075956]
EXAMPLE4_X0 = [0.001, 0.698, 1.201, 1.428, 0.833]


def read_poly_file(path, variables):
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.lstrip().startswith("#")]
    return parse_poly(" ".join(lines), variables)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def example1():
    return parse_system((DATA / "example1.sys").read_text())


@pytest.fixture(scope="session")
def example2():
    return read_poly_file(DATA / "example2.poly", ("x", "y", "z"))


@pytest.fixture(scope="session")
def example3():
    from lowrank_newton.linalg_core import parse_matrix

    return parse_matrix((DATA / "example3.mat").read_text())


@pytest.fixture(scope="session")
def cyclic4():
    return parse_system((DATA / "cyclic4.sys").read_text())


@pytest.fixture(scope="session")
def example4():
    return parse_system((DATA / "example4.sys").read_text())


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def with_singular_values(rng, m, n, s):
    """Random complex m-by-n matrix with prescribed singular values."""
    U, _ = np.linalg.qr(crandn(rng, m, m))
    V, _ = np.linalg.qr(crandn(rng, n, n))
    S = np.zeros((m, n))
    S[: len(s), : len(s)] = np.diag(s)
    return U @ S @ V.conj().T


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
