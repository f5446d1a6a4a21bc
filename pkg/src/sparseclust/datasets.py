"""Seeded generators: two moons, Gaussian blobs, planted partitions and the
bipartite set-disjointness fixture."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigError
from .graph import WeightedGraph


class Dataset(NamedTuple):
    points: np.ndarray | None
    graph: WeightedGraph
    truth: np.ndarray  # generator label per vertex
    params: dict


def similarity_graph(points, sigma: float, knn: int | None = None) -> WeightedGraph:
    """Gaussian-kernel graph ``exp(-|x - y|^2 / sigma^2)``.

    With ``knn`` an edge is kept when either endpoint has the other among its
    ``knn`` nearest neighbours; ``None`` (or ``knn >= n - 1``) gives the
    complete graph.  Pairs whose weight underflows to zero are left out.
    """
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    X = np.asarray(points, dtype=np.float64)
    n = len(X)
    sq = (X * X).sum(1)
    D2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X @ X.T, 0.0)
    if knn is None or knn >= n - 1:
        keep = np.ones((n, n), dtype=bool)
    else:
        if knn < 1:
            raise ConfigError("knn must be positive")
        Dm = D2.copy()
        np.fill_diagonal(Dm, np.inf)
        # stable ranking so ties resolve by index
        nbr = np.argsort(Dm, axis=1, kind="stable")[:, :knn]
        keep = np.zeros((n, n), dtype=bool)
        keep[np.repeat(np.arange(n), knn), nbr.ravel()] = True
        keep |= keep.T
    iu, iv = np.triu_indices(n, 1)
    sel = keep[iu, iv]
    iu, iv = iu[sel], iv[sel]
    w = np.exp(-D2[iu, iv] / sigma ** 2)
    pos = w > 0
    return WeightedGraph(n, iu[pos], iv[pos], w[pos])


def gen_twomoons(n: int = 1400, sigma: float = 0.1, knn: int | None = None, seed=0,
                 noise: float = 0.05) -> Dataset:
    """Two interleaved unit half circles, the second shifted by (1, -0.5)."""
    if n < 2:
        raise ConfigError("need at least two points")
    knn = n // 2 if knn is None else knn
    rng = np.random.default_rng(seed)
    n0 = (n + 1) // 2
    t0 = rng.uniform(0.0, math.pi, n0)
    t1 = rng.uniform(0.0, math.pi, n - n0)
    upper = np.column_stack([np.cos(t0), np.sin(t0)])
    lower = np.column_stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)])
    X = np.vstack([upper, lower]) + noise * rng.standard_normal((n, 2))
    truth = np.repeat([0, 1], [n0, n - n0])
    g = similarity_graph(X, sigma, knn)
    return Dataset(X, g, truth, {"dataset": "twomoons", "n": n, "sigma": sigma, "knn": knn,
                                 "noise": noise, "seed": seed})


def blob_means(k: int, spacing: float = 4.0) -> np.ndarray:
    cols = math.ceil(math.sqrt(k))
    return np.array([[spacing * (i % cols), spacing * (i // cols)] for i in range(k)], dtype=np.float64)


def gen_gauss(n: int = 1000, k: int = 4, sigma: float = 1.0, seed=0, std: float = 0.5,
              spacing: float = 4.0) -> Dataset:
    """``k`` isotropic Gaussian blobs on a square grid, complete similarity graph."""
    if k < 1 or n < k:
        raise ConfigError("need 1 <= k <= n")
    rng = np.random.default_rng(seed)
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    truth = np.repeat(np.arange(k), sizes)
    X = blob_means(k, spacing)[truth] + std * rng.standard_normal((n, 2))
    g = similarity_graph(X, sigma, None)
    return Dataset(X, g, truth, {"dataset": "gauss", "n": n, "k": k, "sigma": sigma, "std": std,
                                 "spacing": spacing, "seed": seed})


def gen_planted(n: int = 200, k: int = 4, p_in: float = 0.5, q_out: float = 0.01, seed=0) -> Dataset:
    """Stochastic block model with ``k`` near-equal blocks and unit weights."""
    if k < 1 or n < k:
        raise ConfigError("every block needs at least one vertex")
    if not (0 <= q_out <= 1 and 0 <= p_in <= 1):
        raise ConfigError("probabilities must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    truth = np.repeat(np.arange(k), sizes)
    iu, iv = np.triu_indices(n, 1)
    p = np.where(truth[iu] == truth[iv], p_in, q_out)
    sel = rng.random(len(iu)) < p
    g = WeightedGraph(n, iu[sel], iv[sel], np.ones(int(sel.sum())))
    return Dataset(None, g, truth, {"dataset": "planted", "n": n, "k": k, "p_in": p_in,
                                    "q_out": q_out, "seed": seed})


# ---------------------------------------------------------------------------
# set-disjointness fixture


@dataclass(frozen=True)
class DisjInstance:
    X: np.ndarray  # s x n, X[i, j] = 1 when item j is absent from site i
    graph: WeightedGraph  # left vertices 0..n-1, right vertices n..n+s-1
    regime: str = ""
    planted: tuple = field(default=())

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def s(self) -> int:
        return self.X.shape[0]

    def all_ones_columns(self) -> np.ndarray:
        return np.flatnonzero(self.X.all(axis=0))

    def isolated_left(self) -> np.ndarray:
        deg = self.graph.degrees()[: self.n]
        return np.flatnonzero(deg == 0)


def disj_graph_from_matrix(X) -> WeightedGraph:
    """Bipartite graph with an edge between left j and right i iff ``X[i, j] == 0``."""
    X = np.asarray(X)
    s, n = X.shape
    i, j = np.nonzero(X == 0)
    return WeightedGraph(n + s, j, n + i, np.ones(len(i)))


def gen_disj_graph(s: int, n: int, regime: str = "disjoint", seed=0) -> DisjInstance:
    """Fair-coin cells; ``disjoint`` redraws every all-ones column, while
    ``intersecting`` additionally forces one random column to all ones."""
    if s < 1 or n < 1:
        raise ConfigError("need s >= 1 and n >= 1")
    if regime not in ("disjoint", "intersecting"):
        raise ConfigError(f"unknown regime {regime!r}")
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, size=(s, n), dtype=np.int8)
    while True:
        bad = np.flatnonzero(X.all(axis=0))
        if not len(bad):
            break
        X[:, bad] = rng.integers(0, 2, size=(s, len(bad)), dtype=np.int8)
    planted = ()
    if regime == "intersecting":
        j = int(rng.integers(n))
        X[:, j] = 1
        planted = (j,)
    return DisjInstance(X, disj_graph_from_matrix(X), regime, planted)


GENERATORS = {"twomoons": gen_twomoons, "gauss": gen_gauss, "planted": gen_planted}
