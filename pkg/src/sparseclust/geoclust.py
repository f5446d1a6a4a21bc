"""Geometric clustering on a blackboard: k-center by parallel guessing and a
successive-sampling coreset for k-median / k-means.

Centers are always drawn from the input points (discrete clustering), which
is also the convention of the brute-force oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .clustering import kmeans
from .errors import InputError
from .netsim import CommLedger, CostModel

OBJECTIVES = ("center", "median", "means")
DEFAULT_DELTA = 0.005
DEFAULT_SAMPLES_PER_CLUSTER = 4
RADIUS_GRID_FACTOR = 1.001
MAX_SEARCH_STEPS = 64


@dataclass(frozen=True)
class WeightedPointSet:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.points, dtype=np.float64)
        if P.ndim == 1:
            P = P[:, None] if P.size else P.reshape(0, 1)
        w = np.ones(len(P)) if self.weights is None else np.asarray(self.weights, dtype=np.float64)
        if w.shape != (len(P),):
            raise InputError("one weight per point")
        if np.any(~np.isfinite(P)) or np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise InputError("points must be finite and weights strictly positive")
        object.__setattr__(self, "points", P)
        object.__setattr__(self, "weights", w)

    @classmethod
    def unweighted(cls, points) -> "WeightedPointSet":
        return cls(points, None)

    def __len__(self):
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class CoresetRound:
    index: int
    centers: np.ndarray
    radius: float
    covered: int
    surviving: int


@dataclass
class GeoResult:
    centers: np.ndarray
    objective: str
    value: float
    ledger: CommLedger | None = None
    info: dict = field(default_factory=dict)


def _dist(X, C):
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.sqrt(np.maximum(d, 0.0))


def objective_value(points, centers, objective: str, weights=None) -> float:
    """Max distance, weighted distance sum or weighted squared-distance sum to
    the nearest center."""
    P = np.asarray(points, dtype=np.float64)
    C = np.asarray(centers, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    if C.ndim == 1:
        C = C[:, None]
    if len(P) == 0:
        return 0.0
    w = np.ones(len(P)) if weights is None else np.asarray(weights, dtype=np.float64)
    near = _dist(P, C).min(1)
    if objective == "center":
        return float(near.max())
    if objective == "median":
        return float((w * near).sum())
    if objective == "means":
        return float((w * near ** 2).sum())
    raise InputError(f"unknown objective {objective!r}")


def _all_points(site_points) -> WeightedPointSet:
    sites = list(site_points)
    if not sites:
        raise InputError("need at least one site")
    dims = {s.dim for s in sites if len(s)}
    if len(dims) > 1:
        raise InputError("all sites must share the dimension")
    d = dims.pop() if dims else 1
    P = np.vstack([s.points for s in sites if len(s)] or [np.zeros((0, d))])
    w = np.concatenate([s.weights for s in sites if len(s)] or [np.zeros(0)])
    return WeightedPointSet(P, w)


def _ledger_for(site_points, ledger):
    if ledger is None:
        n = max(2, sum(len(s) for s in site_points))
        ledger = CommLedger(len(site_points), CostModel(n))
    return ledger


# ---------------------------------------------------------------------------
# k-center


def _greedy_cover(sites, r, k, first):
    """Greedy objections at threshold 2r.  Returns the posted (site, index)
    list and whether at most k centers sufficed."""
    chosen = [first]
    C = [sites[first[0]].points[first[1]]]
    while True:
        objection = None
        Carr = np.array(C)
        for si, sp in enumerate(sites):
            if not len(sp):
                continue
            far = np.flatnonzero(_dist(sp.points, Carr).min(1) > 2.0 * r)
            if len(far):
                objection = (si, int(far[0]))
                break
        if objection is None:
            return chosen, True
        chosen.append(objection)
        C.append(sites[objection[0]].points[objection[1]])
        if len(chosen) > k:
            return chosen, False


def kcenter_parallel_guess(site_points, k: int, delta: float = DEFAULT_DELTA, ledger=None) -> GeoResult:
    """Smallest radius guess on a ``(1 + delta)`` grid for which greedy
    objections stop after at most ``k`` posted centers.

    The returned radius is at most ``2 (1 + delta)`` times the optimal
    discrete k-center radius.
    """
    sites = list(site_points)
    if k < 1:
        raise InputError("k must be positive")
    if delta <= 0:
        raise InputError("delta must be positive")
    ledger = _ledger_for(sites, ledger)
    allp = _all_points(sites)
    if len(allp) == 0:
        return GeoResult(np.zeros((0, allp.dim)), "center", 0.0, ledger)
    pbits = ledger.cost.point_bits(allp.dim)
    distinct = np.unique(allp.points, axis=0)

    # lower bound: k+1 distinct points, lowest site then lowest index first
    seen, probe = [], []
    for si, sp in enumerate(sites):
        for j in range(len(sp)):
            x = sp.points[j]
            if not any(np.array_equal(x, y) for y in seen):
                seen.append(x)
                probe.append((si, j))
            if len(seen) > k:
                break
        if len(seen) > k:
            break
    for si, _ in probe:
        ledger.post_broadcast(pbits, si, "probe point")
    ledger.next_round()
    if len(distinct) <= k:
        return GeoResult(np.array(seen), "center", 0.0, ledger, {"guess": 0.0})

    S = np.array(seen)
    D = _dist(S, S)
    lo = 0.5 * D[np.triu_indices(len(S), 1)].min()
    anchor = S[0]
    for si, sp in enumerate(sites):
        if len(sp):
            ledger.post_broadcast(ledger.cost.real_bits, si, "max distance to anchor")
    ledger.next_round()
    hi = float(_dist(allp.points, anchor[None]).max())
    steps = max(0, math.ceil(math.log(max(hi / lo, 1.0)) / math.log1p(delta) - 1e-12))
    guesses = lo * (1.0 + delta) ** np.arange(steps + 1)

    first = probe[0]
    best = None
    longest = 0
    # every guess runs in parallel on the board; all of their postings count
    for r in guesses:
        chosen, ok = _greedy_cover(sites, float(r), k, first)
        for si, _ in chosen:
            ledger.post_broadcast(pbits, si, "objection")
        longest = max(longest, len(chosen))
        if ok and best is None:
            best = (float(r), chosen)
    for _ in range(longest):
        ledger.next_round()
    if best is None:
        raise AssertionError("the largest guess must succeed")  # unreachable: hi bounds every distance
    r, chosen = best
    C = np.array([sites[si].points[j] for si, j in chosen])
    radius = objective_value(allp.points, C, "center")
    return GeoResult(C, "center", radius, ledger, {"guess": r, "guesses": len(guesses)})


# ---------------------------------------------------------------------------
# successive sampling


def successive_sampling(site_points, k: int, fraction: float = 0.9, seed=0, ledger=None,
                        sample_size: int | None = None):
    """Coreset by repeated uniform sampling and ball covering.

    Each round samples ``sample_size`` surviving points (default ``4k``),
    binary-searches one global radius covering at least ``fraction`` of the
    survivors, and retires the covered points.  A sampled center's weight is
    the total weight of the points it is closest to among those covered.
    """
    sites = list(site_points)
    if k < 1:
        raise InputError("k must be positive")
    if not 0 < fraction < 1:
        raise InputError("fraction must lie in (0, 1)")
    sample_size = DEFAULT_SAMPLES_PER_CLUSTER * k if sample_size is None else int(sample_size)
    if sample_size < 1:
        raise InputError("sample size must be positive")
    ledger = _ledger_for(sites, ledger)
    allp = _all_points(sites)
    d = allp.dim
    pbits = ledger.cost.point_bits(d)
    rng = np.random.default_rng(seed)
    alive = [np.ones(len(sp), dtype=bool) for sp in sites]
    coreset_pts, coreset_w, rounds = [], [], []
    j = 0
    while True:
        counts = np.array([int(a.sum()) for a in alive], dtype=np.int64)
        for si in range(len(sites)):
            ledger.post_broadcast(ledger.cost.count_bits, si, "surviving count")
        ledger.next_round()
        N = int(counts.sum())
        if N == 0:
            break
        # uniform sample without replacement, split across sites by a
        # multivariate hypergeometric draw posted on the board
        take = min(sample_size, N)
        alloc = rng.multivariate_hypergeometric(counts, take)
        ledger.post_broadcast(len(sites) * ledger.cost.count_bits, -1, "allocation")
        ledger.next_round()
        Y = []
        for si, sp in enumerate(sites):
            if alloc[si]:
                idx = np.flatnonzero(alive[si])
                pick = np.sort(rng.choice(idx, size=int(alloc[si]), replace=False))
                Y.append(sp.points[pick])
                ledger.post_broadcast(int(alloc[si]) * pbits, si, "sample")
        Y = np.vstack(Y)
        ledger.next_round()

        near = []
        for si, sp in enumerate(sites):
            dist = _dist(sp.points[alive[si]], Y) if alive[si].any() else np.zeros((0, len(Y)))
            near.append(dist)
        mins = np.concatenate([nd.min(1) for nd in near if len(nd)])
        target = math.ceil(fraction * N)
        if take == N or np.count_nonzero(mins <= 0.0) >= target:
            t = 0.0 if take < N else float(mins.max())
        else:
            # each site posts its smallest positive and largest distance
            for si in range(len(sites)):
                ledger.post_broadcast(2 * ledger.cost.real_bits, si, "distance range")
            ledger.next_round()
            pos = mins[mins > 0]
            lo, hi = float(pos.min()), float(mins.max())
            top = max(0, math.ceil(math.log(hi / lo) / math.log(RADIUS_GRID_FACTOR) - 1e-12))
            grid = lambda i: hi if i >= top else lo * RADIUS_GRID_FACTOR ** i  # noqa: E731
            a, b = 0, top  # b is always feasible
            for _ in range(MAX_SEARCH_STEPS):
                if a >= b:
                    break
                mid = (a + b) // 2
                ledger.post_broadcast(ledger.cost.real_bits, -1, "radius probe")
                for si in range(len(sites)):
                    ledger.post_broadcast(ledger.cost.count_bits, si, "covered count")
                ledger.next_round()
                if np.count_nonzero(mins <= grid(mid)) >= target:
                    b = mid
                else:
                    a = mid + 1
            t = grid(b)

        weight = np.zeros(len(Y))
        covered = 0
        for si, sp in enumerate(sites):
            if not alive[si].any():
                continue
            idx = np.flatnonzero(alive[si])
            dist = near[si]
            hit = dist.min(1) <= t
            owner = dist[hit].argmin(1)
            np.add.at(weight, owner, sp.weights[idx[hit]])
            nz = np.count_nonzero(np.bincount(owner, minlength=len(Y)))
            ledger.post_broadcast(nz * ledger.cost.count_bits, si, "center weights")
            alive[si][idx[hit]] = False
            covered += int(hit.sum())
        ledger.next_round()
        keep = weight > 0
        coreset_pts.append(Y[keep])
        coreset_w.append(weight[keep])
        rounds.append(CoresetRound(j, Y[keep], float(t), covered, N))
        j += 1
    if coreset_pts:
        core = WeightedPointSet(np.vstack(coreset_pts), np.concatenate(coreset_w))
    else:
        core = WeightedPointSet(np.zeros((0, d)), np.zeros(0))
    return core, rounds


def _kmedian_local_search(P, w, k, seed, min_gain=1e-4, max_swaps=10_000):
    D = _dist(P, P)
    rng = np.random.default_rng(seed)
    # D-weighted seeding over the candidate points
    centers = [int(rng.choice(len(P), p=w / w.sum()))]
    near = D[:, centers[0]].copy()
    for _ in range(1, k):
        mass = w * near
        i = int(rng.choice(len(P), p=mass / mass.sum())) if mass.sum() > 0 else int(np.argmax(near))
        centers.append(i)
        near = np.minimum(near, D[:, i])

    def cost_of(cs):
        return float((w * D[:, cs].min(1)).sum())

    cur = cost_of(centers)
    for _ in range(max_swaps):
        best = (cur, None)
        for pos in range(k):
            rest = centers[:pos] + centers[pos + 1:]
            base = D[:, rest].min(1) if rest else np.full(len(P), np.inf)
            cand = (w[:, None] * np.minimum(base[:, None], D)).sum(0)
            cand[centers] = np.inf
            c = int(np.argmin(cand))
            if cand[c] < best[0]:
                best = (float(cand[c]), (pos, c))
        if best[1] is None or cur - best[0] <= min_gain * cur:
            break
        pos, c = best[1]
        centers[pos] = c
        cur = best[0]
    return np.array(centers), cur


def cluster_coreset(coreset: WeightedPointSet, k: int, objective: str = "means", seed=0) -> GeoResult:
    """Weighted k-means (Lloyd) or k-median (single-swap local search over
    coreset points) on a weighted point set."""
    if objective not in ("median", "means"):
        raise InputError("objective must be 'median' or 'means'")
    P, w = coreset.points, coreset.weights
    if len(P) == 0:
        raise InputError("empty coreset")
    distinct = np.unique(P, axis=0)
    if len(distinct) <= k:
        return GeoResult(distinct, objective, 0.0)
    if objective == "means":
        km = kmeans(P, k, seed=seed, weights=w)
        C = km.centers
    else:
        idx, _ = _kmedian_local_search(P, w, k, seed)
        C = P[idx]
    return GeoResult(C, objective, objective_value(P, C, objective, w))


def coreset_pipeline(site_points, k: int, objective: str = "means", seed=0, fraction: float = 0.9,
                     sample_size: int | None = None, ledger=None) -> GeoResult:
    """Successive sampling followed by clustering the coreset; the value is
    measured on the full input."""
    sites = list(site_points)
    ledger = _ledger_for(sites, ledger)
    ss = np.random.SeedSequence(seed).spawn(2)
    core, rounds = successive_sampling(sites, k, fraction, ss[0], ledger, sample_size)
    res = cluster_coreset(core, k, objective, ss[1])
    allp = _all_points(sites)
    value = objective_value(allp.points, res.centers, objective, allp.weights)
    return GeoResult(res.centers, objective, value, ledger,
                     {"coreset": core, "rounds": rounds, "coreset_value": res.value})


# ---------------------------------------------------------------------------
# brute-force oracle


def _kcenter_feasible(A, rem, k):
    # A[c, p]: center c covers point p; rem: points still to cover
    if not rem.any():
        return True
    if k == 0:
        return False
    if k == 1:
        return bool(A[:, rem].all(1).any())
    cover_counts = A[:, rem].sum(0)
    p = np.flatnonzero(rem)[int(np.argmin(cover_counts))]
    cands = np.flatnonzero(A[:, p])
    if k == 2:
        R2 = rem[None, :] & ~A[cands]
        miss = R2.astype(np.float64) @ (~A).T.astype(np.float64)
        return bool((miss == 0).any())
    return any(_kcenter_feasible(A, rem & ~A[c], k - 1) for c in cands)


def geo_bruteforce_opt(points, k: int, objective: str, weights=None, max_n: int = 16,
                       kcenter_max_n: int = 200, kcenter_max_k: int = 3) -> GeoResult:
    """Exact optimum over center sets drawn from the input points."""
    P = np.asarray(points, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    n = len(P)
    if objective not in OBJECTIVES:
        raise InputError(f"unknown objective {objective!r}")
    if k < 1:
        raise InputError("k must be positive")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    distinct = np.unique(P, axis=0)
    if k >= len(distinct):
        return GeoResult(distinct, objective, 0.0)
    D = _dist(P, P)
    if objective == "center":
        if n > kcenter_max_n or k > kcenter_max_k:
            raise InputError(f"k-center oracle refuses n={n}, k={k}")
        radii = np.unique(D)
        lo, hi = 0, len(radii) - 1
        rem = np.ones(n, dtype=bool)
        while lo < hi:
            mid = (lo + hi) // 2
            if _kcenter_feasible(D <= radii[mid], rem, k):
                hi = mid
            else:
                lo = mid + 1
        r = float(radii[lo])
        C = _kcenter_witness(D <= r, rem, k)
        return GeoResult(P[C], objective, objective_value(P, P[C], "center"))
    if n > max_n:
        raise InputError(f"brute-force oracle refuses n={n} > {max_n}")
    combos = np.array(list(itertools.combinations(range(n), k)))
    near = D[combos].min(1)  # (combos, n)
    vals = (near if objective == "median" else near ** 2) @ w
    best = int(np.argmin(vals))
    C = P[combos[best]]
    return GeoResult(C, objective, objective_value(P, C, objective, w))


def _kcenter_witness(A, rem, k):
    if not rem.any():
        return [0]
    if k == 1:
        return [int(np.flatnonzero(A[:, rem].all(1))[0])]
    p = np.flatnonzero(rem)[int(np.argmin(A[:, rem].sum(0)))]
    for c in np.flatnonzero(A[:, p]):
        nxt = rem & ~A[c]
        if _kcenter_feasible(A, nxt, k - 1):
            return [int(c)] + (_kcenter_witness(A, nxt, k - 1) if nxt.any() else [])
    raise AssertionError("no witness for a feasible radius")
