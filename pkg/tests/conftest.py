import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from sparseclust.graph import WeightedGraph, connected_components

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def random_graph(rng, n, p, wlo=1.0, whi=1.0, connected=True, max_tries=200):
    """Erdos-Renyi graph with uniform weights in [wlo, whi]; resampled until connected."""
    for _ in range(max_tries):
        iu, iv = np.triu_indices(n, 1)
        sel = rng.random(len(iu)) < p
        w = rng.uniform(wlo, whi, int(sel.sum())) if whi > wlo else np.full(int(sel.sum()), wlo)
        g = WeightedGraph(n, iu[sel], iv[sel], w)
        if not connected or connected_components(g)[0] == 1:
            return g
    raise RuntimeError("could not draw a connected graph")


def cycle(n, w=1.0):
    return WeightedGraph(n, np.arange(n), (np.arange(n) + 1) % n, np.full(n, w))


def path(n, w=1.0):
    return WeightedGraph(n, np.arange(n - 1), np.arange(1, n), np.full(n - 1, w))


def cliques(k, size, bridge=None):
    edges = []
    for c in range(k):
        base = c * size
        for i in range(size):
            for j in range(i + 1, size):
                edges.append((base + i, base + j, 1.0))
    if bridge:
        edges.extend(bridge)
    return WeightedGraph.from_edges(k * size, edges)


@st.composite
def graphs(draw, min_n=2, max_n=12, connected=False, max_weight=10.0):
    n = draw(st.integers(min_n, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), min_size=0 if not connected else n - 1,
                           max_size=len(pairs), unique=True))
    if connected:
        # a random spanning path guarantees connectivity
        perm = draw(st.permutations(range(n)))
        chosen = list(set(chosen) | {tuple(sorted((perm[i], perm[i + 1]))) for i in range(n - 1)})
        chosen.sort()
    ws = draw(st.lists(st.floats(0.1, max_weight), min_size=len(chosen), max_size=len(chosen)))
    u = [a for a, _ in chosen]
    v = [b for _, b in chosen]
    return WeightedGraph(n, u, v, ws)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
