"""Leverage-score sampling, sparsifier union and the chain of coarse sparsifiers.

The chain is ``K(i) = L_G + gamma(i) I`` with ``gamma(i) = lam_u / 2**i``.  Each
level ``K~(i)`` is a reweighted subgraph of G plus a symbolic ridge
``gamma(i) I`` (ridge rows are never materialized as edges).  Level 0 samples
with the diagonal estimate ``2 w_e / gamma(0)``; level ``i+1`` samples with
scores measured against ``K~(i) / (2 (1 + eps))``; a final level drops the
ridge and samples ``L_G`` itself against the last ridged level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import linalg
from .errors import ChainError, InputError
from .graph import WeightedGraph, laplacian

DENSE_LEVERAGE_MAX_N = 2000
DEFAULT_OVERSAMPLE_C = 8.0
PROB_SNAP = 1e-9


# ---------------------------------------------------------------------------
# leverage scores


def _edge_quadratic(M: np.ndarray, u, v) -> np.ndarray:
    return M[u, u] + M[v, v] - 2.0 * M[u, v]


def leverage_exact(g: WeightedGraph, ridge: float = 0.0, max_n: int = DENSE_LEVERAGE_MAX_N):
    """``tau_e = w_e * b_e^T (L + ridge I)^+ b_e`` via a dense (pseudo-)inverse."""
    if g.n > max_n:
        raise InputError(f"dense leverage oracle refuses n={g.n} > {max_n}")
    if g.m == 0:
        return np.zeros(0)
    L = laplacian(g)
    if ridge > 0:
        M = linalg.spd_inverse(L + ridge * sp.identity(g.n))
    else:
        M = linalg.laplacian_pinv(L)
    return np.clip(g.w * _edge_quadratic(M, g.u, g.v), 0.0, None)


def leverage_approx_base(g: WeightedGraph, gamma0: float) -> np.ndarray:
    """Diagonal estimate ``min(1, 2 w_e / gamma0)`` for the first chain level."""
    if gamma0 <= 0:
        raise InputError("gamma0 must be positive")
    return np.minimum(1.0, 2.0 * g.w / gamma0)


class ResistanceOracle:
    """Evaluates ``b_uv^T K^+ b_uv`` for ``K = L_H + ridge I``.

    ``method='dense'`` inverts K once; ``method='jl'`` projects with a random
    sign matrix and solves ``jl_dim`` systems with conjugate gradients, the
    usual effective-resistance sketch for graphs too large to invert.
    """

    def __init__(self, graph: WeightedGraph, ridge: float, method: str = "auto",
                 jl_dim: int | None = None, seed=0, tol: float = 1e-8):
        self.n = graph.n
        K = laplacian(graph)
        if ridge > 0:
            K = (K + ridge * sp.identity(graph.n)).tocsr()
        if method == "auto":
            method = "dense" if graph.n <= DENSE_LEVERAGE_MAX_N else "jl"
        self.method = method
        if method == "dense":
            self._M = linalg.spd_inverse(K) if ridge > 0 else linalg.laplacian_pinv(K)
        elif method == "jl":
            rng = np.random.default_rng(seed)
            q = jl_dim or max(24, int(math.ceil(24 * math.log(max(graph.n, 2)))))
            # rows of W^{1/2} B and of the ridge block sqrt(ridge) I
            R = rng.choice([-1.0, 1.0], size=(q, graph.m)) / math.sqrt(q)
            Y = np.empty((q, graph.n))
            sw = np.sqrt(graph.w)
            kernel = None if ridge > 0 else linalg.laplacian_kernel(K)
            if ridge > 0:
                S = rng.choice([-1.0, 1.0], size=(q, graph.n)) / math.sqrt(q)
            for i in range(q):
                rhs = np.bincount(graph.u, R[i] * sw, graph.n) - np.bincount(graph.v, R[i] * sw, graph.n)
                if ridge > 0:
                    rhs = rhs + math.sqrt(ridge) * S[i]
                Y[i] = linalg.pseudo_solve(K, rhs, tol=tol, kernel=kernel)
            self._Y = Y
        else:
            raise InputError(f"unknown resistance method {method!r}")

    def __call__(self, u, v) -> np.ndarray:
        u, v = np.asarray(u), np.asarray(v)
        if self.method == "dense":
            return _edge_quadratic(self._M, u, v)
        D = self._Y[:, u] - self._Y[:, v]
        return np.einsum("ij,ij->j", D, D)


def leverage_approx_from(g: WeightedGraph, prev: "ChainLevel", eps: float,
                         method: str = "auto", oracle: ResistanceOracle | None = None):
    """Scores against ``K~(prev) / (2 (1 + eps))``, clamped to 1."""
    if oracle is None:
        oracle = ResistanceOracle(prev.graph, prev.ridge, method=method)
    r = oracle(g.u, g.v)
    return np.clip(2.0 * (1.0 + eps) * g.w * r, 0.0, 1.0)


# ---------------------------------------------------------------------------
# sampling


def oversampling_alpha(eps: float, n: int, C: float = DEFAULT_OVERSAMPLE_C) -> float:
    """``C * eps**-2 * ln n``."""
    return C * eps ** -2 * math.log(max(n, 2))


def alpha_for_budget(scores, budget: float) -> float:
    """Largest alpha with ``sum(min(1, alpha * scores)) <= budget``."""
    scores = np.asarray(scores, dtype=np.float64)
    pos = np.sort(scores[scores > 0])[::-1]
    if len(pos) == 0 or budget >= len(pos):
        return math.inf
    if budget <= 0:
        return 0.0
    # with the top j scores saturated: j + alpha * tail_sum(j) = budget
    j = np.arange(len(pos))
    tail = np.cumsum(pos[::-1])[::-1]
    alphas = (budget - j) / tail
    prev = np.concatenate([[np.inf], pos[:-1]])
    ok = (alphas * prev >= 1.0) & (alphas * pos <= 1.0) & (alphas > 0)
    if ok.any():
        return float(alphas[np.argmax(ok)])
    return float(alphas[alphas > 0].min())


def sampling_probabilities(scores, alpha: float) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    if math.isinf(alpha):
        return np.where(scores > 0, 1.0, 0.0)
    p = np.minimum(1.0, alpha * scores)
    # round-off leaves bridge scores a hair under 1; keep those edges unreweighted
    p[p > 1.0 - PROB_SNAP] = 1.0
    return p


def sample_mask(scores, alpha: float, seed):
    """Bernoulli keep-mask and probabilities; coin ``i`` depends only on (seed, i)."""
    if not alpha > 0:
        raise InputError("alpha must be positive")
    p = sampling_probabilities(scores, alpha)
    coins = np.random.default_rng(seed).random(len(p))
    return coins < p, p


def sample_sparsifier(g: WeightedGraph, scores, alpha: float, seed) -> WeightedGraph:
    """Keep edge e with probability ``min(1, alpha * tau_e)``, reweighted by ``1/p_e``."""
    scores = np.asarray(scores)
    if scores.shape != (g.m,):
        raise InputError("scores must align with the graph's edge list")
    keep, p = sample_mask(scores, alpha, seed)
    return WeightedGraph(g.n, g.u[keep], g.v[keep], g.w[keep] / p[keep])


def merge_sparsifiers(parts) -> WeightedGraph:
    """Edge-wise union with weight addition on coinciding pairs."""
    parts = list(parts)
    if not parts:
        raise InputError("nothing to merge")
    n = parts[0].n
    if any(p.n != n for p in parts):
        raise InputError("all parts must share the vertex count")
    return WeightedGraph(
        n,
        np.concatenate([p.u for p in parts]),
        np.concatenate([p.v for p in parts]),
        np.concatenate([p.w for p in parts]),
    )


_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = x + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def pair_coins(u, v, seed: int) -> np.ndarray:
    """Public uniform coin per unordered vertex pair, shared by every site."""
    u = np.asarray(u, dtype=np.uint64)
    v = np.asarray(v, dtype=np.uint64)
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    with np.errstate(over="ignore"):
        key = _splitmix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ _splitmix64(lo * np.uint64(0x100000001B3) + hi))
    return (key >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


# ---------------------------------------------------------------------------
# chain


@dataclass(frozen=True)
class ChainParams:
    lam_u: float
    lam_l: float
    d: int
    gammas: tuple = field(repr=False)

    @classmethod
    def from_bounds(cls, lam_u: float, lam_l: float) -> "ChainParams":
        if not (lam_u > 0 and lam_l > 0):
            raise InputError("spectral bounds must be positive")
        d = max(0, math.ceil(math.log2(lam_u / lam_l) - 1e-12))
        return cls(lam_u, lam_l, d, tuple(lam_u / 2.0 ** i for i in range(d + 1)))


def weight_ratio_exponent(g: WeightedGraph) -> float:
    """log_n(w_max / w_min), the polynomial-boundedness exponent."""
    if g.m == 0 or g.n < 2:
        return 0.0
    return math.log(g.w.max() / g.w.min()) / math.log(g.n)


def chain_params(g: WeightedGraph, max_d: int = 60, max_weight_exponent: float = 10.0) -> ChainParams:
    """Default schedule: ``lam_u = 2 * max degree``,
    ``d = ceil(log2(2 n^2 w_max / w_min))`` capped at ``max_d``."""
    if g.m == 0:
        raise ChainError("cannot build a chain for an edgeless graph")
    if weight_ratio_exponent(g) > max_weight_exponent:
        raise ChainError(
            f"weights are not polynomially bounded: w_max/w_min exceeds n^{max_weight_exponent:g}"
        )
    lam_u = 2.0 * float(g.degrees().max())
    ratio = 2.0 * g.n ** 2 * float(g.w.max() / g.w.min())
    d = min(max_d, max(0, math.ceil(math.log2(ratio))))
    return ChainParams.from_bounds(lam_u, lam_u / 2.0 ** d)


@dataclass(frozen=True)
class ChainLevel:
    index: int
    gamma: float
    graph: WeightedGraph
    ridge: float

    def matrix(self) -> sp.csr_matrix:
        L = laplacian(self.graph)
        return (L + self.ridge * sp.identity(self.graph.n)).tocsr() if self.ridge else L


def exact_level_matrix(g: WeightedGraph, gamma: float) -> sp.csr_matrix:
    return (laplacian(g) + gamma * sp.identity(g.n)).tocsr()


def build_chain(g: WeightedGraph, eps: float, seed, alpha: float | None = None,
                C: float = DEFAULT_OVERSAMPLE_C, params: ChainParams | None = None,
                verify: bool = False, method: str = "auto") -> list[ChainLevel]:
    """Construct ``[K~(0), ..., K~(d)]`` followed by the ridge-free level.

    The returned list has ``d + 2`` entries; the last has ``ridge = 0`` and its
    graph is the spectral sparsifier of ``g``.  In ``verify`` mode every level
    is checked against its exact counterpart with the dense sandwich oracle and
    a :class:`ChainError` names the first failing level.
    """
    if g.n == 0 or g.m == 0:
        raise ChainError("chain needs a nonempty graph")
    params = params or chain_params(g)
    alpha = oversampling_alpha(eps, g.n, C) if alpha is None else alpha
    seeds = np.random.SeedSequence(seed).spawn(params.d + 2)
    levels: list[ChainLevel] = []

    scores = leverage_approx_base(g, params.gammas[0])
    H = sample_sparsifier(g, scores, alpha, seeds[0])
    levels.append(ChainLevel(0, params.gammas[0], H, params.gammas[0]))
    for i in range(1, params.d + 2):
        gamma = params.gammas[i] if i <= params.d else 0.0
        scores = leverage_approx_from(g, levels[-1], eps, method=method)
        H = sample_sparsifier(g, scores, alpha, seeds[i])
        levels.append(ChainLevel(i, gamma, H, gamma))
    if verify:
        verify_chain(g, levels, eps)
    return levels


def verify_chain(g: WeightedGraph, levels, eps: float):
    for level in levels:
        exact = exact_level_matrix(g, level.ridge)
        if not linalg.psd_between(exact, level.matrix(), 1 - eps, 1 + eps, row_span=True):
            raise ChainError(f"level {level.index} is not a (1+{eps:g})-approximation", level.index)
