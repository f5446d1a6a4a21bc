import math

import numpy as np
import pytest

from conftest import cliques, path, random_graph
from sparseclust.clustering import cluster_agreement, spectral_cluster
from sparseclust.datasets import gen_planted
from sparseclust.errors import ChainError, InputError
from sparseclust.graph import WeightedGraph, normalized_laplacian
from sparseclust.linalg import smallest_eigpairs
from sparseclust.netsim import CostModel, EdgeShard, partition_edges
from sparseclust.protocols import (
    divergence_cuts,
    gap_report,
    is_diverged,
    run_baseline,
    run_blackboard,
    run_msgpassing,
)


def four_cliques(seed=0, size=50, inter=30):
    rng = np.random.default_rng(seed)
    g = cliques(4, size)
    n = 4 * size
    truth = np.repeat(np.arange(4), size)
    u = rng.integers(0, n, 4 * inter)
    v = rng.integers(0, n, 4 * inter)
    ok = truth[u] != truth[v]
    u, v = u[ok][:inter], v[ok][:inter]
    g = WeightedGraph(n, np.r_[g.u, u], np.r_[g.v, v], np.r_[g.w, np.ones(len(u))])
    return g, truth


def edge_uplink(ledger):
    return sum(e[3] for e in ledger.events if e[4] == "kept edges")


class TestBaseline:
    def test_ledger_is_every_edge_once(self):
        g = random_graph(np.random.default_rng(0), 60, 0.2)
        res = run_baseline(partition_edges(g, 5, "random", 1), 2)
        assert res.ledger.total_bits == g.m * CostModel(60).edge_bits == res.ledger.uplink_bits

    def test_single_site_equals_centralized(self):
        g, _ = four_cliques()
        res = run_baseline(partition_edges(g, 1), 4, seed=3)
        labels, _ = spectral_cluster(g, 4, seed=3)
        assert np.array_equal(res.labels, labels)

    def test_disconnected_components(self):
        res = run_baseline(partition_edges(cliques(3, 6), 2, "round_robin"), 3)
        assert res.ncut == 0 and len(res.partition) == 3


class TestMsgPassing:
    def test_tree_shards_keep_everything(self):
        rng = np.random.default_rng(1)
        n = 30
        shards = []
        for site in range(3):
            parent = [int(rng.integers(0, i)) for i in range(1, n)]
            shards.append(EdgeShard(site, np.arange(n - 1), WeightedGraph(n, parent, np.arange(1, n),
                                                                          np.full(n - 1, 1.0 + site))))
        m = sum(sh.graph.m for sh in shards)
        for kwargs in ({"alpha": 1.0}, {"sample_c": 5.0}):
            res = run_msgpassing(shards, 2, **kwargs)
            assert res.edges_kept == m
            assert edge_uplink(res.ledger) == m * CostModel(n).edge_bits

    def test_agreement_scalars(self):
        g, _ = four_cliques()
        res = run_msgpassing(partition_edges(g, 6, "random", 0), 4)
        assert res.ledger.total_bits == edge_uplink(res.ledger) + 2 * 6 * 64
        assert res.ledger.downlink_bits == 6 * 64

    def test_bits_grow_with_sites(self):
        g = random_graph(np.random.default_rng(2), 2000, 0.05)
        totals = [run_msgpassing(partition_edges(g, s, "random", 0), 2, seed=0).ledger.total_bits
                  for s in (2, 4, 8, 16)]
        assert all(a < b for a, b in zip(totals, totals[1:]))
        assert totals[-1] >= 4 * totals[0]

    def test_four_clique_recovery(self):
        g, truth = four_cliques(seed=4)
        res = run_msgpassing(partition_edges(g, 8, "random", 1), 4, seed=1)
        assert cluster_agreement(g, res.labels, truth).max_ratio <= 0.1
        assert not res.diverged

    def test_eps_range(self):
        with pytest.raises(InputError):
            run_msgpassing(partition_edges(path(4), 1), 1, eps=0.5)

    def test_deterministic(self):
        g, truth = four_cliques(seed=5)
        shards = partition_edges(g, 4, "random", 2)
        a = run_msgpassing(shards, 4, seed=9)
        b = run_msgpassing(shards, 4, seed=9)
        assert np.array_equal(a.labels, b.labels) and str(a.row(9)) == str(b.row(9))
        assert a.sparsifier == b.sparsifier

    def test_spectrum_preserved(self):
        d = gen_planted(seed=3)
        k = 4
        for kwargs in ({}, {"sample_c": None, "alpha": None, "eps": 0.1}):
            res = run_msgpassing(partition_edges(d.graph, 5, "random", 0), k, seed=0, **kwargs)
            lg = smallest_eigpairs(normalized_laplacian(d.graph), k + 1).values
            lh = smallest_eigpairs(normalized_laplacian(res.sparsifier), k + 1).values
            assert abs(lh[0]) < 1e-9
            assert np.all(lh[1:] >= lg[1:] / 4) and np.all(lh[1:] <= 4 * lg[1:])


class TestBlackboard:
    def test_four_clique_recovery(self):
        g, truth = four_cliques(seed=6)
        res = run_blackboard(partition_edges(g, 8, "random", 1), 4, seed=1)
        assert cluster_agreement(g, res.labels, truth).max_ratio <= 0.1
        assert not res.diverged

    def test_sites_change_only_registration(self):
        g, _ = four_cliques(seed=7)
        totals = {s: run_blackboard(partition_edges(g, s, "random", 3), 4, seed=2).ledger.total_bits
                  for s in (1, 2, 4, 30, 60)}
        for s0 in (1, 2, 30):
            assert totals[2 * s0] <= totals[s0] + s0 * 128
        assert max(totals[2], totals[30]) <= 1.2 * min(totals[2], totals[30])

    def test_single_site_posts_everything_on_board(self):
        g, _ = four_cliques(seed=8)
        res = run_blackboard(partition_edges(g, 1), 4, seed=0)
        led = res.ledger
        assert led.uplink_bits == 0 and led.downlink_bits == 0
        edge_bits = sum(e[3] for e in led.events if e[4].startswith("level"))
        assert edge_bits == res.edges_kept * CostModel(g.n).edge_bits
        assert led.total_bits == edge_bits + 128 + g.n * math.ceil(math.log2(4))

    def test_each_edge_posted_at_most_once(self):
        g, _ = four_cliques(seed=9)
        res = run_blackboard(partition_edges(g, 5, "random", 0), 4, seed=0)
        assert res.edges_kept <= g.m
        posted = sum(e[3] for e in res.ledger.events if e[4].startswith("level"))
        assert posted == res.edges_kept * CostModel(g.n).edge_bits
        assert res.edges_kept >= res.sparsifier.m

    def test_verify_mode(self):
        g = random_graph(np.random.default_rng(10), 40, 0.3)
        shards = partition_edges(g, 3, "random", 0)
        run_blackboard(shards, 2, alpha=1e9, verify=True, chain_rounds=6)
        with pytest.raises(ChainError):
            run_blackboard(shards, 2, alpha=0.5, verify=True, chain_rounds=6)

    def test_sketched_resistances(self):
        g, truth = four_cliques(seed=11)
        res = run_blackboard(partition_edges(g, 4, "random", 0), 4, seed=0, method="jl")
        assert cluster_agreement(g, res.labels, truth).max_ratio <= 0.1

    def test_rejects_zero_rounds(self):
        with pytest.raises(InputError):
            run_blackboard(partition_edges(path(5), 1), 1, chain_rounds=0)

    def test_deterministic(self):
        g, _ = four_cliques(seed=12)
        shards = partition_edges(g, 4, "random", 2)
        a, b = run_blackboard(shards, 4, seed=3), run_blackboard(shards, 4, seed=3)
        assert str(a.row(3)) == str(b.row(3)) and np.array_equal(a.labels, b.labels)


class TestDivergence:
    def test_identical_graph_not_flagged(self):
        g = random_graph(np.random.default_rng(0), 20, 0.3)
        assert not is_diverged(g, g)

    def test_lost_bridge_flagged(self):
        g = cliques(2, 5, bridge=[(4, 5, 1.0)])
        h = g.subgraph(~((g.u == 4) & (g.v == 5)))
        assert h.m == g.m - 1 and is_diverged(g, h)

    def test_numerically_separate_components_not_flagged(self):
        g = cliques(2, 5, bridge=[(4, 5, 1e-9)])
        h = cliques(2, 5)
        assert divergence_cuts(g, h).max() < 1e-6 and not is_diverged(g, h)

    def test_isolated_vertex_has_unit_conductance(self):
        g = path(3)
        h = WeightedGraph(3, [0], [1], [1.0])
        assert divergence_cuts(g, h).max() == 1.0

    def test_starved_sampling_is_flagged(self):
        g, _ = four_cliques(seed=13)
        res = run_msgpassing(partition_edges(g, 1), 4, sample_c=0.3, seed=0)
        assert res.diverged


class TestGapReport:
    def test_disjoint_cliques(self):
        rep = gap_report(cliques(3, 4), 3)
        assert rep.rho == 0 and rep.exact and rep.upsilon is None

    def test_single_edge(self):
        rep = gap_report(path(2), 1)
        assert rep.lam_k1 == pytest.approx(2.0) and rep.rho == 0 and rep.exact

    def test_barbell(self):
        bar = cliques(2, 4, bridge=[(3, 4, 1.0)])
        rep = gap_report(bar, 2)
        lam3 = np.linalg.eigvalsh(normalized_laplacian(bar).toarray())[2]
        assert rep.rho == pytest.approx(1 / 13)
        assert rep.lam_k1 == pytest.approx(lam3)
        assert rep.upsilon == pytest.approx(13 * lam3)
        assert rep.lam_k <= rep.lam_k1

    def test_large_graph_omits_rho(self):
        rep = gap_report(random_graph(np.random.default_rng(1), 30, 0.3), 2)
        assert rep.rho is None and rep.upsilon is None and rep.lam_k <= rep.lam_k1
