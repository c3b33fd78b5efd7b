import numpy as np
import pytest

from p0wilks import DirectedGraph, check_existence


@pytest.fixture
def cycle3():
    return DirectedGraph.from_edges(3, [(1, 2), (2, 3), (3, 1)])


@pytest.fixture
def circulant5():
    return DirectedGraph.from_edges(5, [(i, (i + k - 1) % 5 + 1) for i in range(1, 6) for k in (1, 2)])


def random_graph(rng, n, p=0.5):
    adj = (rng.random((n, n)) < p).astype(np.int8)
    np.fill_diagonal(adj, 0)
    return DirectedGraph(adj)


def random_interior_graph(rng, n, p=0.5):
    """Random graph with every degree strictly between 0 and n-1."""
    while True:
        g = random_graph(rng, n, p)
        if check_existence(g).ok:
            return g


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
