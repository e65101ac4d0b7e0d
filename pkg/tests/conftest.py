from pathlib import Path

import numpy as np
import pytest

from dropedgepp.data import graph_from_raw, karate_graph, random_graph

FIXTURES = Path(__file__).parent / "fixtures"


def make_graph(n, pairs, features=None, labels=None, name="g"):
    if features is None:
        features = np.eye(n)
    if labels is None:
        labels = np.arange(n) % 2
    return graph_from_raw(n, pairs, features, labels, [0], [1], list(range(2, n)), name=name)


@pytest.fixture
def triangle():
    return make_graph(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def path3():
    return make_graph(3, [(0, 1), (1, 2)])


@pytest.fixture(scope="session")
def karate():
    return karate_graph()


@pytest.fixture
def small_random():
    return random_graph(10, 20, num_features=5, seed=3)


@pytest.fixture(scope="session")
def fixture_root():
    return FIXTURES


# criterion number -> one-line verdict, filled by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
