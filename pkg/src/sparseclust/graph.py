"""Weighted undirected graphs, Laplacians and exact cut quantities.

Edges are stored canonically: oriented ``u < v``, sorted by ``(u, v)``, with
parallel input edges coalesced by adding their weights.  Edge *indices* in this
canonical order are what the sampling code keys its randomness on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

from .errors import DegenerateError, InputError


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    n: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        n = int(self.n)
        if n < 0:
            raise InputError("vertex count must be nonnegative")
        u = np.asarray(self.u, dtype=np.int64).ravel()
        v = np.asarray(self.v, dtype=np.int64).ravel()
        w = np.asarray(self.w, dtype=np.float64).ravel()
        if not (len(u) == len(v) == len(w)):
            raise InputError("u, v, w must have equal length")
        if len(u):
            if min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= n:
                raise InputError("vertex id out of range")
            if np.any(u == v):
                raise InputError("self-loops are not allowed")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise InputError("edge weights must be finite and strictly positive")
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        key = lo * max(n, 1) + hi
        if len(key) and not np.all(key[1:] > key[:-1]):
            uniq, inv = np.unique(key, return_inverse=True)
            w = np.bincount(inv, weights=w, minlength=len(uniq))
            lo, hi = uniq // max(n, 1), uniq % max(n, 1)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "u", _frozen(lo, np.int64))
        object.__setattr__(self, "v", _frozen(hi, np.int64))
        object.__setattr__(self, "w", _frozen(w, np.float64))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[float]]) -> "WeightedGraph":
        rows = [tuple(e) for e in edges]
        if not rows:
            return cls(n, [], [], [])
        arr = np.array(rows, dtype=np.float64)
        if arr.shape[1] == 2:
            arr = np.column_stack([arr, np.ones(len(arr))])
        return cls(n, arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2])

    @classmethod
    def from_dense(cls, W: np.ndarray) -> "WeightedGraph":
        W = np.asarray(W, dtype=np.float64)
        u, v = np.nonzero(np.triu(W, 1))
        return cls(W.shape[0], u, v, W[u, v])

    @property
    def m(self) -> int:
        return len(self.w)

    def edges(self):
        return list(zip(self.u.tolist(), self.v.tolist(), self.w.tolist()))

    def degrees(self) -> np.ndarray:
        return np.bincount(self.u, self.w, self.n) + np.bincount(self.v, self.w, self.n)

    def subgraph(self, mask) -> "WeightedGraph":
        """Edge-induced subgraph on the same vertex set (``mask`` selects edges)."""
        mask = np.asarray(mask)
        return WeightedGraph(self.n, self.u[mask], self.v[mask], self.w[mask])

    def with_weights(self, w) -> "WeightedGraph":
        return WeightedGraph(self.n, self.u, self.v, w)

    def scaled(self, c: float) -> "WeightedGraph":
        return self.with_weights(self.w * c)

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        A[self.u, self.v] = self.w
        A[self.v, self.u] = self.w
        return A

    def adjacency(self) -> sp.csr_matrix:
        A = sp.coo_matrix((self.w, (self.u, self.v)), shape=(self.n, self.n))
        return (A + A.T).tocsr()

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
            and np.array_equal(self.w, other.w)
        )

    def __repr__(self):
        return f"WeightedGraph(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class IncidenceFactor:
    """Signed incidence ``B`` (row e: +1 at u, -1 at v, u < v) and edge weights."""

    B: sp.csr_matrix
    weights: np.ndarray

    def laplacian(self) -> sp.csr_matrix:
        return (self.B.T @ sp.diags(self.weights) @ self.B).tocsr()

    def scaled_rows(self) -> sp.csr_matrix:
        return (sp.diags(np.sqrt(self.weights)) @ self.B).tocsr()


# ---------------------------------------------------------------------------
# vertex sets and cuts


def _members(g: WeightedGraph, s) -> np.ndarray:
    idx = np.unique(np.fromiter((int(x) for x in s), dtype=np.int64))
    if len(idx) and (idx[0] < 0 or idx[-1] >= g.n):
        raise InputError("vertex id out of range")
    return idx


def _indicator(g: WeightedGraph, s) -> np.ndarray:
    x = np.zeros(g.n, dtype=bool)
    x[_members(g, s)] = True
    return x


def volume(g: WeightedGraph, s) -> float:
    """Sum of weighted degrees over ``s``."""
    return float(g.degrees()[_members(g, s)].sum())


def cut_weight(g: WeightedGraph, s) -> float:
    x = _indicator(g, s)
    return float(g.w[x[g.u] != x[g.v]].sum())


def conductance(g: WeightedGraph, s) -> float:
    mu = volume(g, s)
    if mu <= 0:
        raise DegenerateError("set has zero volume")
    return cut_weight(g, s) / mu


def labels_to_parts(labels) -> list[set[int]]:
    labels = np.asarray(labels)
    return [set(np.flatnonzero(labels == c).tolist()) for c in np.unique(labels)]


def parts_to_labels(n: int, parts) -> np.ndarray:
    labels = np.full(n, -1, dtype=np.int64)
    for i, part in enumerate(parts):
        for x in part:
            x = int(x)
            if not 0 <= x < n:
                raise InputError("vertex id out of range")
            if labels[x] != -1:
                raise InputError(f"vertex {x} appears in more than one part")
            labels[x] = i
    if np.any(labels < 0):
        raise InputError("parts do not cover every vertex")
    return labels


def part_conductances(g: WeightedGraph, labels) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    k = int(labels.max()) + 1 if len(labels) else 0
    deg = g.degrees()
    vol = np.bincount(labels, deg, k)
    crossing = labels[g.u] != labels[g.v]
    cut = np.bincount(labels[g.u][crossing], g.w[crossing], k) + np.bincount(
        labels[g.v][crossing], g.w[crossing], k
    )
    if np.any(vol <= 0):
        raise DegenerateError("a part has zero volume")
    return cut / vol


def ncut(g: WeightedGraph, parts) -> float:
    """Normalized cut: half the sum of the parts' conductances.

    ``parts`` is a list of vertex sets forming a partition, or a label array.
    """
    if isinstance(parts, np.ndarray) and parts.ndim == 1 and parts.dtype.kind in "iu":
        if len(parts) != g.n or np.any(parts < 0):
            raise InputError("label array must assign every vertex")
        _, labels = np.unique(parts, return_inverse=True)
    else:
        labels = parts_to_labels(g.n, parts)
    return 0.5 * float(part_conductances(g, labels).sum())


def _restricted_growth_strings(n: int, k: int) -> np.ndarray:
    # rows: labelings with label[0] = 0 and each new label = (max so far) + 1
    rows = np.zeros((1, 1), dtype=np.int8)
    top = np.zeros(1, dtype=np.int8)
    for _ in range(1, n):
        blocks, tops = [], []
        for lab in range(k):
            ok = top + 1 >= lab
            if not ok.any():
                continue
            sub = rows[ok]
            blocks.append(np.column_stack([sub, np.full(len(sub), lab, dtype=np.int8)]))
            tops.append(np.maximum(top[ok], lab))
        rows, top = np.vstack(blocks), np.concatenate(tops).astype(np.int8)
    return rows[top == k - 1]


def kway_expansion_bruteforce(g: WeightedGraph, k: int, max_n: int = 14):
    """Exact k-way expansion by enumerating every partition into k nonempty parts.

    Returns ``(rho, labels)`` where ``labels`` achieves the minimum.  Test oracle
    only: refuses graphs with more than ``max_n`` vertices.
    """
    if g.n > max_n:
        raise InputError(f"brute-force k-way expansion refuses n={g.n} > {max_n}")
    if not 1 <= k <= g.n:
        raise InputError("need 1 <= k <= n")
    deg = g.degrees()
    L = laplacian(g).toarray()
    best, best_labels = np.inf, None
    rgs = _restricted_growth_strings(g.n, k)
    for start in range(0, len(rgs), 1 << 16):
        lab = rgs[start : start + (1 << 16)]
        worst = np.zeros(len(lab))
        valid = np.ones(len(lab), dtype=bool)
        for j in range(k):
            mask = (lab == j).astype(np.float64)
            vol = mask @ deg
            cut = np.einsum("bi,ij,bj->b", mask, L, mask)
            valid &= vol > 0
            with np.errstate(divide="ignore", invalid="ignore"):
                worst = np.maximum(worst, np.where(vol > 0, cut / vol, np.inf))
        worst[~valid] = np.inf
        i = int(np.argmin(worst))
        if worst[i] < best:
            best, best_labels = float(worst[i]), lab[i].astype(np.int64)
    if best_labels is None:
        raise DegenerateError("no partition with positive-volume parts exists")
    return max(best, 0.0), best_labels


# ---------------------------------------------------------------------------
# matrices


def laplacian(g: WeightedGraph) -> sp.csr_matrix:
    A = g.adjacency()
    return (sp.diags(g.degrees()) - A).tocsr()


def normalized_laplacian(g: WeightedGraph) -> sp.csr_matrix:
    deg = g.degrees()
    if np.any(deg <= 0):
        raise DegenerateError("normalized Laplacian needs every vertex to have positive degree")
    d = sp.diags(1.0 / np.sqrt(deg))
    N = (sp.identity(g.n) - d @ g.adjacency() @ d).tocsr()
    return N


def incidence(g: WeightedGraph) -> IncidenceFactor:
    rows = np.repeat(np.arange(g.m), 2)
    cols = np.column_stack([g.u, g.v]).ravel()
    vals = np.tile([1.0, -1.0], g.m)
    B = sp.csr_matrix((vals, (rows, cols)), shape=(g.m, g.n))
    return IncidenceFactor(B, g.w.copy())


def connected_components(g: WeightedGraph):
    """``(count, labels)`` of the graph's connected components."""
    if g.n == 0:
        return 0, np.zeros(0, dtype=np.int64)
    count, labels = _cc(g.adjacency(), directed=False)
    return int(count), labels.astype(np.int64)


def quadratic_form(g: WeightedGraph, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(g.w * (x[g.u] - x[g.v]) ** 2))
