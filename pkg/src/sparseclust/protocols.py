"""Distributed graph clustering protocols over simulated sites.

* ``run_baseline``: every site ships its whole edge list to the coordinator.
* ``run_msgpassing``: every site sparsifies its own edges with exact local
  leverage scores and ships only what it kept; the coordinator clusters the
  union.
* ``run_blackboard``: the sites jointly build a chain of coarse sparsifiers
  on a shared board.  Sampling coins are public (a hash of the vertex pair),
  so once an edge and its weight are on the board everybody can tell whether
  it is kept at any later level; an edge is therefore posted at most once.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .clustering import cluster_agreement, spectral_cluster
from .errors import ChainError, ConvergenceError, DegenerateError, InputError
from .graph import (
    WeightedGraph,
    connected_components,
    kway_expansion_bruteforce,
    labels_to_parts,
    ncut,
    normalized_laplacian,
)
from .netsim import CommLedger, CostModel, EdgeShard, reassemble
from .sparsify import (
    DEFAULT_OVERSAMPLE_C,
    ChainLevel,
    ResistanceOracle,
    alpha_for_budget,
    exact_level_matrix,
    leverage_exact,
    merge_sparsifiers,
    oversampling_alpha,
    pair_coins,
    sample_sparsifier,
    sampling_probabilities,
)

DEFAULT_EPS = 0.1
DEFAULT_CHAIN_ROUNDS = 18
DEFAULT_MSG_SAMPLE_C = 5.0
DEFAULT_BOARD_SAMPLE_C = 10.0
DEFAULT_PHI_TOL = 1e-6

RESULT_COLUMNS = ("ncut", "agreement", "edges_kept", "diverged")


@dataclass
class ProtocolResult:
    protocol: str
    labels: np.ndarray
    ledger: CommLedger
    edges_kept: int
    ncut: float
    diverged: bool
    sparsifier: WeightedGraph | None = None
    runtime: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def partition(self) -> list[set[int]]:
        return labels_to_parts(self.labels)

    def row(self, seed, truth=None, graph: WeightedGraph | None = None) -> dict:
        """Ledger columns plus quality columns; runtime is left out so rows
        are reproducible byte for byte."""
        r = self.ledger.row(self.protocol, seed)
        agreement = float("nan")
        if truth is not None and graph is not None and not self.diverged:
            try:
                agreement = cluster_agreement(graph, self.labels, np.asarray(truth)).max_ratio
            except (InputError, DegenerateError):
                pass
        r.update(ncut=self.ncut, agreement=agreement, edges_kept=self.edges_kept, diverged=int(self.diverged))
        return r


def _check_shards(shards) -> list[EdgeShard]:
    shards = list(shards)
    if not shards:
        raise InputError("need at least one shard")
    n = shards[0].graph.n
    if any(sh.graph.n != n for sh in shards):
        raise InputError("shards must share the vertex count")
    return shards


def _int_seed(*key) -> int:
    return int(np.random.SeedSequence(list(key)).generate_state(1, np.uint64)[0] >> np.uint64(1))


def divergence_cuts(g: WeightedGraph, H: WeightedGraph) -> np.ndarray:
    """Conductance in ``g`` of every connected component of ``H``.

    Components that are whole components of ``g`` score 0.
    """
    count, lab = connected_components(H)
    deg = g.degrees()
    vol = np.bincount(lab, deg, count)
    cross = lab[g.u] != lab[g.v]
    cut = np.bincount(lab[g.u][cross], g.w[cross], count) + np.bincount(lab[g.v][cross], g.w[cross], count)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(vol > 0, cut / np.where(vol > 0, vol, 1.0), 0.0)
    return phi


def is_diverged(g: WeightedGraph, H: WeightedGraph, phi_tol: float = DEFAULT_PHI_TOL) -> bool:
    """True when ``H`` splits off a vertex set that is not (numerically) cut
    off in ``g``: some component of ``H`` has conductance above ``phi_tol`` in ``g``."""
    return bool(np.any(divergence_cuts(g, H) > phi_tol))


def _finish(protocol, g, H, k, seed, ledger, edges_kept, t0, phi_tol, info, check_divergence=True):
    diverged = check_divergence and is_diverged(g, H, phi_tol)
    try:
        labels, _ = spectral_cluster(H, k, seed=seed, isolated="zero" if check_divergence else "error")
        value = ncut(g, labels)
        if len(np.unique(labels)) < k:
            diverged = True
    except (DegenerateError, ConvergenceError) as exc:
        if not check_divergence:
            raise
        labels = np.zeros(g.n, dtype=np.int64)
        value = float("nan")
        diverged = True
        info = dict(info, failure=str(exc))
    return ProtocolResult(protocol, labels, ledger, edges_kept, value, diverged, H,
                          time.perf_counter() - t0, info)


def run_baseline(shards, k: int, seed=0) -> ProtocolResult:
    t0 = time.perf_counter()
    shards = _check_shards(shards)
    g = reassemble(shards)
    ledger = CommLedger(len(shards), CostModel(g.n))
    for sh in shards:
        ledger.charge_edges(sh.site, sh.graph.m, "up")
    ledger.next_round()
    labels, _ = spectral_cluster(g, k, seed=seed)
    return ProtocolResult("baseline", labels, ledger, g.m, ncut(g, labels), False, g,
                          time.perf_counter() - t0, {})


def _local_leverage(h: WeightedGraph) -> np.ndarray:
    if h.m == 0:
        return np.zeros(0)
    if h.n <= 2000:
        return leverage_exact(h)
    oracle = ResistanceOracle(h, 0.0, method="jl", seed=0)
    return np.clip(h.w * oracle(h.u, h.v), 0.0, 1.0)


def run_msgpassing(shards, k: int, eps: float = DEFAULT_EPS, seed=0,
                   sample_c: float | None = DEFAULT_MSG_SAMPLE_C, alpha: float | None = None,
                   oversample_c: float = DEFAULT_OVERSAMPLE_C, phi_tol: float = DEFAULT_PHI_TOL) -> ProtocolResult:
    """Per-site sparsify, ship kept edges, cluster the union.

    The sampling rate is ``alpha`` when given; else a per-site budget of
    ``sample_c * n`` expected edges; else ``oversample_c * eps^-2 * ln n``.
    """
    if not 0 < eps <= 1 / 3 + 1e-12:
        raise InputError("eps must lie in (0, 1/3]")
    t0 = time.perf_counter()
    shards = _check_shards(shards)
    g = reassemble(shards)
    n, s = g.n, len(shards)
    ledger = CommLedger(s, CostModel(n))
    # agree on n: one count up and one count back per site
    for sh in shards:
        ledger.charge_scalars(sh.site, 1, "up", "vertex count")
    ledger.next_round()
    for sh in shards:
        ledger.charge_scalars(sh.site, 1, "down", "vertex count")
    ledger.next_round()
    parts = []
    for sh in shards:
        h = sh.graph
        tau = _local_leverage(h)
        if alpha is not None:
            a = alpha
        elif sample_c is not None:
            a = alpha_for_budget(tau, sample_c * n)
        else:
            a = oversampling_alpha(eps, n, oversample_c)
        if h.m == 0 or a == 0:
            kept = WeightedGraph(n, [], [], [])
        else:
            kept = sample_sparsifier(h, tau, a, _int_seed(seed, 1, sh.site))
        ledger.charge_edges(sh.site, kept.m, "up", "kept edges")
        parts.append(kept)
    ledger.next_round()
    H = merge_sparsifiers(parts)
    kept_total = sum(p.m for p in parts)
    return _finish("msgpassing", g, H, k, seed, ledger, kept_total, t0, phi_tol,
                   {"eps": eps, "sample_c": sample_c, "alpha": alpha})


def board_gammas(lam_u: float, chain_rounds: int) -> list[float]:
    """Ridges of the board chain: ``lam_u / 2^i`` for ``i < chain_rounds``, then 0."""
    if chain_rounds < 1:
        raise InputError("chain_rounds must be at least 1")
    return [lam_u / 2.0 ** i for i in range(chain_rounds)] + [0.0]


def run_blackboard(shards, k: int, eps: float = DEFAULT_EPS, chain_rounds: int = DEFAULT_CHAIN_ROUNDS,
                   alpha: float | None = None, seed=0, sample_c: float | None = DEFAULT_BOARD_SAMPLE_C,
                   oversample_c: float = DEFAULT_OVERSAMPLE_C, method: str = "auto", verify: bool = False,
                   phi_tol: float = DEFAULT_PHI_TOL) -> ProtocolResult:
    """Chain of coarse sparsifiers built on a shared board.

    The first level scores edges by ``2 w / gamma(0)``; each later level by
    ``2 (1 + eps) w b^T K~^+ b`` against the previous level read off the
    board; the last level has no ridge and is clustered by site 0.
    """
    if not 0 < eps <= 1 / 3 + 1e-12:
        raise InputError("eps must lie in (0, 1/3]")
    t0 = time.perf_counter()
    shards = _check_shards(shards)
    g = reassemble(shards)
    n, s = g.n, len(shards)
    cost = CostModel(n)
    ledger = CommLedger(s, cost)
    if g.m == 0:
        raise DegenerateError("blackboard chain needs at least one edge")

    # registration: each site posts its vertex count and its largest local weight
    local_max = []
    for sh in shards:
        ledger.post_broadcast(2 * cost.count_bits, sh.site, "registration")
        local_max.append(float(sh.graph.w.max()) if sh.graph.m else 0.0)
    ledger.next_round()
    lam_u = 2.0 * n * max(local_max)
    gammas = board_gammas(lam_u, chain_rounds)

    if alpha is not None:
        a = alpha
    elif sample_c is not None:
        a = sample_c / (2.0 * (1.0 + eps))
    else:
        a = oversampling_alpha(eps, n, oversample_c)

    # global edge index of every shard edge; the board is a posted-flag per edge
    site_of = np.empty(g.m, dtype=np.int64)
    gid_parts = []
    for sh in shards:
        key = sh.graph.u * max(n, 1) + sh.graph.v
        gid = np.searchsorted(g.u * max(n, 1) + g.v, key)
        site_of[gid] = sh.site
        gid_parts.append(gid)
    coins = pair_coins(g.u, g.v, _int_seed(seed, 2))
    posted = np.zeros(g.m, dtype=bool)

    levels: list[ChainLevel] = []
    for i, gamma in enumerate(gammas):
        if i == 0:
            scores = np.minimum(1.0, 2.0 * g.w / gammas[0])
        else:
            prev = levels[-1]
            if prev.graph.m == 0 and prev.ridge == 0:
                scores = np.ones(g.m)
            else:
                oracle = ResistanceOracle(prev.graph, prev.ridge, method=method, seed=_int_seed(seed, 3, i))
                scores = np.clip(2.0 * (1.0 + eps) * g.w * oracle(g.u, g.v), 0.0, 1.0)
        p = sampling_probabilities(scores, a)
        keep = coins < p
        fresh = keep & ~posted
        if fresh.any():
            per_site = np.bincount(site_of[fresh], minlength=s)
            for site in np.flatnonzero(per_site):
                ledger.charge_edges(int(site), int(per_site[site]), "board", f"level {i}")
        posted |= fresh
        ledger.next_round()
        H = WeightedGraph(n, g.u[keep], g.v[keep], g.w[keep] / p[keep])
        levels.append(ChainLevel(i, gamma, H, gamma))

    if verify:
        for level in levels:
            exact = exact_level_matrix(g, level.ridge)
            if not linalg.psd_between(exact, level.matrix(), 1 - eps, 1 + eps, row_span=True):
                raise ChainError(f"level {level.index} is not a (1+{eps:g})-approximation", level.index)

    H = levels[-1].graph
    result = _finish("blackboard", g, H, k, seed, ledger, int(posted.sum()), t0, phi_tol,
                     {"eps": eps, "chain_rounds": chain_rounds, "alpha": a, "lam_u": lam_u,
                      "final_edges": H.m})
    # site 0 posts the answer: a cluster id per vertex
    ledger.post_broadcast(n * math.ceil(math.log2(k)) if k > 1 else 0, 0, "answer")
    ledger.next_round()
    result.info["levels"] = levels
    return result


# ---------------------------------------------------------------------------
# gap report


@dataclass(frozen=True)
class GapReport:
    lam_k: float
    lam_k1: float
    rho: float | None
    upsilon: float | None
    exact: bool


def gap_report(g: WeightedGraph, k: int, bruteforce_max_n: int = 14) -> GapReport:
    """``lambda_k``, ``lambda_{k+1}`` of the normalized Laplacian and, for small
    graphs, the exact k-way expansion and the ratio between the two."""
    if not 1 <= k < g.n:
        raise InputError("need 1 <= k < n")
    pairs = linalg.smallest_eigpairs(normalized_laplacian(g), k + 1)
    lam = np.maximum(pairs.values, 0.0)
    rho = upsilon = None
    exact = False
    if g.n <= bruteforce_max_n:
        rho, _ = kway_expansion_bruteforce(g, k, max_n=bruteforce_max_n)
        if rho <= 1e-12:
            exact = True
        else:
            upsilon = float(lam[k] / rho)
    return GapReport(float(lam[k - 1]), float(lam[k]), rho, upsilon, exact)
