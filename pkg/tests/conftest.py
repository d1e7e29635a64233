from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from calibkit.fixtures import toy_dataset

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def toy():
    return toy_dataset()


@pytest.fixture
def toy_csv():
    return DATA / "toy3.csv"


def simplex_rows(rng, n, m, alpha=1.0):
    return rng.dirichlet(np.full(m, alpha), size=n)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
