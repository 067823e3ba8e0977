from pathlib import Path

import numpy as np
import pytest

from cmrac.scenario import load_scenario
from cmrac.simulation import simulate

DATA = Path(__file__).parent / "data"

# acceptance lines collected by test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def paper():
    return load_scenario("paper_sec4")


@pytest.fixture(scope="session")
def paper_P():
    return np.loadtxt(DATA / "paper_sec4_P.csv", delimiter=",")


@pytest.fixture(scope="session")
def run(paper):
    """Memoised simulate(paper_sec4 with overrides, kind); full-horizon runs take seconds."""
    cache = {}

    def get(kind, **overrides):
        key = (kind, tuple(sorted(overrides.items())))
        if key not in cache:
            cache[key] = simulate(paper.with_overrides(**overrides), kind)
        return cache[key]

    return get


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
