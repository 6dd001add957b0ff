import time
from fractions import Fraction

import numpy as np
import pytest

from rfb.design import make_problem, optimize

EXAMPLE1 = ["2/5", "1/5", "2/5"]
EXAMPLE2 = ["2/9", "1/3", "1/3", "1/9"]

_acceptance: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    """Print and remember one acceptance line; the summary hook repeats them."""
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    _acceptance[number] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        ok, detail = _acceptance[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}")


@pytest.fixture(scope="session")
def example1_problem():
    return make_problem(EXAMPLE1, epsilon=Fraction(1, 20), K=7, grid_size=1024, seed=0)


@pytest.fixture(scope="session")
def example1_design(example1_problem):
    """Full default design of the first example: 8 restarts, timed."""
    start = time.perf_counter()
    theta, trace = optimize(example1_problem, restarts=8, max_iter=2000)
    return theta, trace, time.perf_counter() - start


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
