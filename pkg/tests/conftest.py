import numpy as np
import pytest

from hdperc import graphs


def path(n, boundary=()):
    return graphs.from_edges(n, [(i, i + 1) for i in range(n - 1)], boundary)


def cycle(n):
    return graphs.from_edges(n, [(i, i + 1) for i in range(n - 1)] + [(0, n - 1)])


def triangle():
    return cycle(3)


def random_connected(n, extra, seed):
    """Random spanning tree on n vertices plus ``extra`` chords (no loops, no repeats)."""
    g = np.random.default_rng(seed)
    edges = set()
    for v in range(1, n):
        u = int(g.integers(0, v))
        edges.add((u, v))
    tries = 0
    while len(edges) < n - 1 + extra and tries < 10 * extra + 10:
        a, b = sorted(int(x) for x in g.choice(n, 2, replace=False))
        edges.add((a, b))
        tries += 1
    edges = sorted(edges)
    k = int(g.integers(1, max(2, n // 3)))
    boundary = sorted(int(x) for x in g.choice(np.arange(1, n), size=min(k, n - 1), replace=False))
    return graphs.from_edges(n, edges, boundary)


@pytest.fixture
def tree3():
    return graphs.GraphFamily.regular_tree(3)


@pytest.fixture
def z2():
    return graphs.GraphFamily.lattice(2)
