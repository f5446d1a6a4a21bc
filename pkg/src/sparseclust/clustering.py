"""Spectral embedding, weighted k-means and partition agreement."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DegenerateError, InputError
from .graph import WeightedGraph, normalized_laplacian, parts_to_labels
from .linalg import smallest_eigpairs

EXACT_MATCHING_MAX_K = 8


@dataclass(frozen=True)
class SpectralEmbedding:
    points: np.ndarray  # n x k, row v is F(v)
    eigenvalues: np.ndarray
    vectors: np.ndarray  # orthonormal eigenvectors before degree scaling
    active: np.ndarray  # vertices with positive degree

    @property
    def k(self) -> int:
        return self.points.shape[1]


def spectral_embed(g: WeightedGraph, k: int, seed=0, isolated: str = "error", tol: float = 1e-8):
    """Map vertex v to ``f(v) / sqrt(d_v)`` using the bottom-k eigenvectors of
    the normalized Laplacian.

    With ``isolated='zero'`` zero-degree vertices are dropped from the
    eigenproblem and embedded at the origin instead of raising.
    """
    if not 1 <= k <= g.n:
        raise InputError(f"need 1 <= k <= n, got k={k}, n={g.n}")
    deg = g.degrees()
    active = deg > 0
    if not active.all():
        if isolated != "zero":
            raise DegenerateError("graph has isolated vertices")
        if active.sum() < k:
            raise DegenerateError("fewer non-isolated vertices than clusters")
    idx = np.flatnonzero(active)
    if len(idx) < g.n:
        remap = np.full(g.n, -1)
        remap[idx] = np.arange(len(idx))
        sub = WeightedGraph(len(idx), remap[g.u], remap[g.v], g.w)
    else:
        sub = g
    pairs = smallest_eigpairs(normalized_laplacian(sub), k, tol=tol, seed=seed)
    F = np.zeros((g.n, k))
    F[idx] = pairs.vectors / np.sqrt(deg[idx])[:, None]
    vecs = np.zeros((g.n, k))
    vecs[idx] = pairs.vectors
    return SpectralEmbedding(F, pairs.values, vecs, active)


@dataclass(frozen=True)
class KMeansResult:
    centers: np.ndarray
    labels: np.ndarray
    cost: float
    iterations: int
    history: tuple  # cost after each assignment step
    empty: np.ndarray  # True where a center owns no point at the end
    restart: int


def _sqdist(X, C):
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _plusplus(X, w, k, rng):
    n = len(X)
    first = rng.choice(n, p=w / w.sum())
    centers = [X[first]]
    d2 = _sqdist(X, X[first][None])[:, 0]
    for _ in range(1, k):
        mass = w * d2
        total = mass.sum()
        if total <= 0:
            i = rng.choice(n, p=w / w.sum())
        else:
            i = rng.choice(n, p=mass / total)
        centers.append(X[i])
        d2 = np.minimum(d2, _sqdist(X, X[i][None])[:, 0])
    return np.array(centers)


def _lloyd(X, w, C, max_iters, tol):
    k = len(C)
    history = []
    labels = None
    it = 0
    for it in range(1, max_iters + 1):
        D = _sqdist(X, C)
        labels = D.argmin(1)
        owned = np.bincount(labels, minlength=k)
        # repair: move each empty center to the point worst served right now
        for j in np.flatnonzero(owned == 0):
            far = int(np.argmax(D[np.arange(len(X)), labels] * (w > 0)))
            C[j] = X[far]
            D = _sqdist(X, C)
            labels = D.argmin(1)
            owned = np.bincount(labels, minlength=k)
        cost = float((w * D[np.arange(len(X)), labels]).sum())
        history.append(cost)
        mass = np.bincount(labels, w, k)
        newC = C.copy()
        nz = mass > 0
        for dim in range(X.shape[1]):
            s = np.bincount(labels, w * X[:, dim], k)
            newC[nz, dim] = s[nz] / mass[nz]
        C = newC
        if len(history) >= 2 and history[-2] - history[-1] <= tol * max(history[-2], 1e-300):
            break
    D = _sqdist(X, C)
    final_labels = D.argmin(1)
    final_cost = float((w * D[np.arange(len(X)), final_labels]).sum())
    if final_cost < history[-1]:
        history.append(final_cost)
        labels = final_labels
    else:
        final_cost = history[-1]
        labels = labels if labels is not None else final_labels
    return C, labels, final_cost, it, history


def kmeans(points, k: int, restarts: int = 10, max_iters: int = 100, seed=0, weights=None,
           tol: float = 1e-9) -> KMeansResult:
    """Weighted k-means: k-means++ seeding then Lloyd, best of ``restarts``.

    Ties in cost go to the lower restart index.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = len(X)
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (n,) or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InputError("weights must be a finite nonnegative vector, one per point")
    if not np.all(np.isfinite(X)):
        raise InputError("points must be finite")
    if k < 1:
        raise InputError("k must be positive")
    support = X[w > 0]
    if len(support) == 0:
        raise DegenerateError("all weights are zero")
    if k > len(np.unique(support, axis=0)):
        raise DegenerateError(f"k={k} exceeds the number of distinct points")
    best = None
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    for r, child in enumerate(root.spawn(restarts)):
        rng = np.random.default_rng(child)
        C0 = _plusplus(X, w, k, rng)
        C, labels, cost, iters, hist = _lloyd(X, w, C0, max_iters, tol)
        if best is None or cost < best[2]:
            best = (C, labels, cost, iters, hist, r)
    C, labels, cost, iters, hist, r = best
    owned = np.bincount(labels[w > 0], minlength=k) if (w > 0).any() else np.zeros(k)
    return KMeansResult(C, labels.astype(np.int64), cost, iters, tuple(hist), owned == 0, r)


def spectral_cluster(g: WeightedGraph, k: int, seed=0, isolated: str = "error", restarts: int = 10):
    """Embed then run k-means; returns ``(labels, embedding)``."""
    emb = spectral_embed(g, k, seed=seed, isolated=isolated)
    if isolated == "zero" and not emb.active.all():
        km = kmeans(emb.points[emb.active], k, restarts=restarts, seed=seed)
        labels = np.zeros(g.n, dtype=np.int64)
        labels[emb.active] = km.labels
        # isolated vertices join the cluster whose center is nearest the origin
        labels[~emb.active] = int(np.argmin((km.centers ** 2).sum(1)))
        return labels, emb
    km = kmeans(emb.points, k, restarts=restarts, seed=seed)
    return km.labels, emb


# ---------------------------------------------------------------------------
# agreement


@dataclass(frozen=True)
class AgreementScore:
    sigma: tuple  # found part i is matched to truth part sigma[i]
    ratios: np.ndarray  # mu(A_i sym-diff S_sigma(i)) / mu(S_sigma(i))
    max_ratio: float
    symdiff: np.ndarray  # mu(A_i sym-diff S_sigma(i)), unnormalized


def _as_labels(n, part):
    if isinstance(part, np.ndarray) and part.ndim == 1 and part.dtype.kind in "iu":
        if len(part) != n:
            raise InputError("label array length must equal n")
        _, lab = np.unique(part, return_inverse=True)
        return lab
    return parts_to_labels(n, part)


def cluster_agreement(g: WeightedGraph, found, truth) -> AgreementScore:
    """Best matching of found clusters to true clusters by volume-weighted
    symmetric difference."""
    a = _as_labels(g.n, found)
    b = _as_labels(g.n, truth)
    k = int(a.max()) + 1 if len(a) else 0
    if k != (int(b.max()) + 1 if len(b) else 0):
        raise InputError("partitions have different numbers of parts")
    deg = g.degrees()
    inter = np.zeros((k, k))
    np.add.at(inter, (a, b), deg)
    va, vb = inter.sum(1), inter.sum(0)
    if np.any(vb <= 0):
        raise DegenerateError("a true cluster has zero volume")
    sym = va[:, None] + vb[None, :] - 2.0 * inter
    sym = np.maximum(sym, 0.0)
    R = sym / vb[None, :]
    if k <= EXACT_MATCHING_MAX_K:
        best_key, sigma = None, None
        for perm in itertools.permutations(range(k)):
            vals = R[np.arange(k), perm]
            key = (vals.max(), vals.sum())
            if best_key is None or key < best_key:
                best_key, sigma = key, perm
    else:
        _, cols = linear_sum_assignment(R)
        sigma = tuple(int(c) for c in cols)
    sigma = tuple(int(x) for x in sigma)
    ratios = R[np.arange(k), sigma]
    return AgreementScore(sigma, ratios, float(ratios.max()) if k else 0.0, sym[np.arange(k), sigma])
