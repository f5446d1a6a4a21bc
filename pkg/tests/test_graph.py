import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import cliques, cycle, graphs, path
from sparseclust.errors import DegenerateError, InputError
from sparseclust.graph import (
    WeightedGraph,
    conductance,
    connected_components,
    cut_weight,
    incidence,
    kway_expansion_bruteforce,
    laplacian,
    ncut,
    normalized_laplacian,
    part_conductances,
    quadratic_form,
    volume,
)
from sparseclust.linalg import smallest_eigpairs


class TestWeightedGraph:
    def test_canonical_order_and_coalescing(self):
        g = WeightedGraph(4, [2, 1, 0, 1], [1, 2, 3, 0], [1.0, 2.0, 0.5, 4.0])
        assert g.edges() == [(0, 1, 4.0), (0, 3, 0.5), (1, 2, 3.0)]

    @pytest.mark.parametrize("u,v,w", [([0], [0], [1.0]), ([0], [5], [1.0]), ([0], [1], [0.0]),
                                       ([0], [1], [-1.0]), ([0], [1], [np.inf]), ([-1], [1], [1.0])])
    def test_rejects_invalid_edges(self, u, v, w):
        with pytest.raises(InputError):
            WeightedGraph(3, u, v, w)

    def test_arrays_are_read_only(self):
        g = path(3)
        with pytest.raises(ValueError):
            g.w[0] = 5.0

    def test_dense_round_trip(self):
        g = WeightedGraph(4, [0, 1, 2], [1, 2, 3], [1.0, 2.0, 3.0])
        assert WeightedGraph.from_dense(g.to_dense()) == g

    @given(graphs())
    def test_subgraph_split_and_merge_restores_graph(self, g):
        mask = np.arange(g.m) % 2 == 0
        a, b = g.subgraph(mask), g.subgraph(~mask)
        merged = WeightedGraph(g.n, np.r_[a.u, b.u], np.r_[a.v, b.v], np.r_[a.w, b.w])
        assert merged == g


class TestCuts:
    def test_volume_examples(self):
        assert volume(path(2), []) == 0
        assert volume(path(2), {0}) == 1
        assert volume(cycle(4), {0, 1}) == 4

    def test_volume_rejects_out_of_range(self):
        with pytest.raises(InputError):
            volume(path(2), {2})

    def test_conductance_examples(self):
        two_edges = WeightedGraph(4, [0, 2], [1, 3], [1.0, 1.0])
        assert conductance(two_edges, {0, 1}) == 0
        assert conductance(path(2), {0}) == 1
        assert conductance(cycle(4), {0, 1}) == 0.5

    def test_conductance_zero_volume(self):
        g = WeightedGraph(3, [0], [1], [1.0])
        with pytest.raises(DegenerateError):
            conductance(g, {2})

    def test_ncut_examples(self):
        tri2 = WeightedGraph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
        assert ncut(tri2, [{0, 1, 2}, {3, 4, 5}]) == 0
        assert ncut(cycle(4), [{0, 1}, {2, 3}]) == 0.5
        assert ncut(cycle(4), [{0, 2}, {1, 3}]) == 1.0

    def test_ncut_accepts_labels(self):
        assert ncut(cycle(4), np.array([0, 0, 1, 1])) == 0.5

    @pytest.mark.parametrize("parts", [[{0, 1}, {1, 2, 3}], [{0, 1}, {2}]])
    def test_ncut_rejects_non_partitions(self, parts):
        with pytest.raises(InputError):
            ncut(cycle(4), parts)

    def test_ncut_zero_volume_part(self):
        g = WeightedGraph(3, [0], [1], [1.0])
        with pytest.raises(DegenerateError):
            ncut(g, [{0, 1}, {2}])

    @given(graphs(min_n=3, max_n=9, connected=True), st.integers(2, 3), st.integers(0, 2**31))
    def test_ncut_range_and_definition(self, g, k, seed):
        labels = np.random.default_rng(seed).integers(0, k, g.n)
        labels[:k] = np.arange(k)
        value = ncut(g, labels)
        assert 0 <= value <= k / 2 + 1e-12
        direct = sum(cut_weight(g, np.flatnonzero(labels == c)) / volume(g, np.flatnonzero(labels == c))
                     for c in range(k))
        assert value == pytest.approx(direct / 2)


class TestKwayExpansion:
    def test_k_components(self):
        g = cliques(3, 3)
        rho, labels = kway_expansion_bruteforce(g, 3)
        assert rho == 0
        assert part_conductances(g, labels).max() == 0

    def test_single_edge(self):
        assert kway_expansion_bruteforce(path(2), 2)[0] == 1

    def test_four_cycle(self):
        assert kway_expansion_bruteforce(cycle(4), 2)[0] == 0.5

    def test_refuses_large_graphs(self):
        with pytest.raises(InputError):
            kway_expansion_bruteforce(path(15), 2)

    def test_barbell(self):
        bar = cliques(2, 4, bridge=[(3, 4, 1.0)])
        rho, labels = kway_expansion_bruteforce(bar, 2)
        assert rho == pytest.approx(1 / 13)
        assert set(np.flatnonzero(labels == labels[0])) in ({0, 1, 2, 3}, {4, 5, 6, 7})

    @given(graphs(min_n=3, max_n=8, connected=True), st.integers(1, 3))
    def test_cheeger_lower_bound(self, g, k):
        lam = smallest_eigpairs(normalized_laplacian(g), k).values
        rho, labels = kway_expansion_bruteforce(g, k)
        assert lam[k - 1] / 2 <= rho + 1e-9
        assert part_conductances(g, labels).max() == pytest.approx(rho)


class TestMatrices:
    def test_single_edge_laplacian(self):
        assert np.array_equal(laplacian(path(2)).toarray(), [[1, -1], [-1, 1]])

    def test_path3_normalized_spectrum(self):
        vals = np.linalg.eigvalsh(normalized_laplacian(path(3)).toarray())
        assert np.allclose(vals, [0, 1, 2])

    def test_normalized_rejects_isolated(self):
        with pytest.raises(DegenerateError):
            normalized_laplacian(WeightedGraph(3, [0], [1], [1.0]))

    @given(graphs())
    def test_laplacian_rows_sum_to_zero(self, g):
        assert np.allclose(laplacian(g) @ np.ones(g.n), 0, atol=1e-9)

    @given(graphs(min_n=2))
    def test_incidence_factor_reproduces_laplacian(self, g):
        inc = incidence(g)
        B = inc.B.toarray()
        if g.m:
            assert np.all((B == 1).sum(1) == 1) and np.all((B == -1).sum(1) == 1)
        assert np.allclose(inc.laplacian().toarray(), laplacian(g).toarray())

    @given(graphs(), st.integers(0, 2**31))
    def test_quadratic_form_matches_edge_sum(self, g, seed):
        x = np.random.default_rng(seed).standard_normal(g.n)
        direct = sum(w * (x[a] - x[b]) ** 2 for a, b, w in g.edges())
        assert quadratic_form(g, x) == pytest.approx(direct, rel=1e-9, abs=1e-12)
        assert x @ (laplacian(g) @ x) == pytest.approx(direct, rel=1e-9, abs=1e-9)

    @given(graphs(min_n=2, max_n=10))
    def test_normalized_spectrum_in_range_and_kernel_counts_components(self, g):
        if np.any(g.degrees() <= 0):
            return
        vals = np.linalg.eigvalsh(normalized_laplacian(g).toarray())
        assert vals.min() >= -1e-9 and vals.max() <= 2 + 1e-9
        assert int(np.sum(vals < 1e-9)) == connected_components(g)[0]
