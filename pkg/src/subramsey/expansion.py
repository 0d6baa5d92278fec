"""Expanding vertices, spanning sets in chains, good pairs and the
bad-vertex sets used when a few pool vertices are deleted."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, as_mask

_TOL = 1e-12


def _members(G: Graph, S) -> np.ndarray:
    return np.flatnonzero(as_mask(G.n, S))


def _mm(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Boolean matrix product."""
    if x.shape[1] == 0:
        return np.zeros((x.shape[0], y.shape[1]), dtype=bool)
    return (x.astype(np.float32) @ y.astype(np.float32)) > 0.5


class PoolReach:
    """Length-``q`` path reachability from ``A`` back into ``A`` through ``B``.

    Vertex arguments are positions in the sorted member arrays ``self.a`` and
    ``self.b``. For ``q <= 3`` the layered walk sets are exact: interior
    vertices come from ``B`` which is disjoint from ``A`` and consecutive
    interior vertices differ, so no walk can repeat a vertex. For ``q >= 4``
    every walk endpoint is confirmed by a simple-path search.
    """

    def __init__(self, G: Graph, A, B, q: int):
        if q < 1:
            raise ValueError("q must be positive")
        self.G = G
        self.q = q
        self.a = _members(G, A)
        self.b = _members(G, B)
        if np.intersect1d(self.a, self.b).size:
            raise ValueError("A and B must be disjoint")
        self.ab = G.block(self.a, self.b)
        self.bb = G.block(self.b, self.b) if q >= 3 else None
        self.aa = G.block(self.a, self.a) if q == 1 else None
        self.apos = {int(v): i for i, v in enumerate(self.a.tolist())}
        self.bpos = {int(v): i for i, v in enumerate(self.b.tolist())}

    def _free_b(self, forbidden_b) -> np.ndarray:
        free = np.ones(len(self.b), dtype=bool)
        if forbidden_b is not None:
            free &= ~forbidden_b
        return free

    def forward_layers(self, src: np.ndarray, free_b: np.ndarray) -> list[np.ndarray]:
        """Walk layers ``L_1..L_{q-1}`` inside the free part of ``B``."""
        layers = [self.ab[src] & free_b]
        for _ in range(self.q - 2):
            layers.append(_mm(layers[-1], self.bb) & free_b)
        return layers

    def matrix(self, src, forbidden_b=None, forbidden_a=None, include_self=False) -> np.ndarray:
        """``R[i, j]``: a path of length q joins ``a[src[i]]`` to ``a[j]``."""
        src = np.asarray(src, dtype=np.int64)
        free_b = self._free_b(forbidden_b)
        end_ok = np.ones(len(self.a), dtype=bool)
        if forbidden_a is not None:
            end_ok &= ~forbidden_a
        if self.q == 1:
            reach = self.aa[src].copy()
        else:
            last = self.forward_layers(src, free_b)[-1]
            reach = _mm(last, self.ab.T)
        reach &= end_ok[None, :]
        rows = np.arange(len(src))
        if self.q >= 4:
            for i, j in zip(*np.nonzero(reach)):
                if j != src[i] and self.path(int(src[i]), int(j), free_b) is None:
                    reach[i, j] = False
        reach[rows, src] = include_self & end_ok[src]
        return reach

    def path(self, src: int, dst: int, free_b: np.ndarray) -> list[int] | None:
        """A simple path ``src -> dst`` of length q, returned as global vertex ids.

        Traced backwards from ``dst`` through the forward walk layers, always
        trying the lowest-index predecessor first.
        """
        if self.q == 1:
            return [int(self.a[src]), int(self.a[dst])] if self.aa[src, dst] else None
        layers = [L[0] for L in self.forward_layers(np.array([src]), free_b)]
        chosen: list[int] = []

        def back(k: int, succ_row: np.ndarray) -> bool:
            # choose x in layer k (0-based) adjacent to the previously chosen vertex
            cand = np.flatnonzero(succ_row & layers[k])
            for x in cand.tolist():
                if x in chosen:
                    continue
                chosen.append(x)
                if k == 0 or back(k - 1, self.bb[x]):
                    return True
                chosen.pop()
            return False

        if not back(self.q - 2, self.ab[dst]):
            return None
        inner = [int(self.b[x]) for x in reversed(chosen)]
        return [int(self.a[src]), *inner, int(self.a[dst])]


def _validate(G: Graph, v: int, A, B, forbidden) -> None:
    amask = as_mask(G.n, A)
    bmask = as_mask(G.n, B)
    if not amask[v]:
        raise ValueError(f"vertex {v} is not in A")
    if np.any(amask & bmask):
        raise ValueError("A and B must be disjoint")
    if forbidden is not None and np.any(as_mask(G.n, forbidden) & ~(amask | bmask)):
        raise ValueError("forbidden set must lie inside A ∪ B")


def _split_forbidden(pr: PoolReach, forbidden):
    if forbidden is None:
        return None, None
    fmask = as_mask(pr.G.n, forbidden)
    return fmask[pr.b], fmask[pr.a]


def reach_set(G: Graph, v: int, A, B, q: int, forbidden=None, include_self: bool = False) -> frozenset:
    """Vertices ``w`` of ``A`` joined to ``v`` by a length-``q`` path whose
    interior lies in ``B``, avoiding ``forbidden`` entirely."""
    _validate(G, v, A, B, forbidden)
    pr = PoolReach(G, A, B, q)
    fb, fa = _split_forbidden(pr, forbidden)
    row = pr.matrix([pr.apos[v]], fb, fa, include_self)[0]
    return frozenset(pr.a[row].tolist())


def reachable_fraction(G: Graph, v: int, A, B, q: int, forbidden=None,
                       include_self: bool = False) -> float:
    _validate(G, v, A, B, forbidden)
    size = len(_members(G, A))
    return len(reach_set(G, v, A, B, q, forbidden, include_self)) / size


def is_expanding_vertex(G: Graph, v: int, A, B, q: int, nu: float, forbidden=None,
                        include_self: bool = False) -> bool:
    return reachable_fraction(G, v, A, B, q, forbidden, include_self) >= 1 - nu - _TOL


def expansion_census(G: Graph, A, B, q: int, forbidden=None, vertices=None,
                     include_self: bool = False) -> dict[int, float]:
    """Reachable fraction for every vertex of ``vertices`` (default: all of ``A``)."""
    pr = PoolReach(G, A, B, q)
    fb, fa = _split_forbidden(pr, forbidden)
    if vertices is None:
        src = np.arange(len(pr.a))
    else:
        src = np.array([pr.apos[int(v)] for v in vertices], dtype=np.int64)
    if len(src) == 0 or len(pr.a) == 0:
        return {}
    counts = pr.matrix(src, fb, fa, include_self).sum(axis=1)
    return {int(pr.a[s]): float(c) / len(pr.a) for s, c in zip(src.tolist(), counts.tolist())}


# ---------------------------------------------------------------------------
# chains


@dataclass
class Chain:
    """Cyclic sequence of equal-size disjoint layers in a host graph."""

    graph: Graph
    layers: tuple[tuple[int, ...], ...]
    eps: float = 0.0

    def __post_init__(self):
        self.layers = tuple(tuple(sorted(int(x) for x in L)) for L in self.layers)
        if len(self.layers) < 2:
            raise ValueError("a chain needs at least two layers")
        sizes = {len(L) for L in self.layers}
        if len(sizes) != 1:
            raise ValueError("chain layers must have equal sizes")
        flat = [v for L in self.layers for v in L]
        if len(set(flat)) != len(flat):
            raise ValueError("chain layers must be disjoint")

    @property
    def ell(self) -> int:
        return len(self.layers)

    @property
    def n(self) -> int:
        return len(self.layers[0])

    def _block(self, i: int, j: int) -> np.ndarray:
        return self.graph.block(np.array(self.layers[i]), np.array(self.layers[j]))

    @property
    def m(self) -> int:
        """Fewest edges over the consecutive pairs, wrapping around."""
        return min(int(self._block(i, (i + 1) % self.ell).sum()) for i in range(self.ell))

    def reach_matrix(self) -> np.ndarray:
        """``R[i, j]``: ``V1[j]`` lies in the composed neighborhood of ``{V1[i]}``."""
        R = self._block(0, 1)
        for i in range(1, self.ell):
            R = _mm(R, self._block(i, (i + 1) % self.ell))
        return R


def spanning_fraction(chain: Chain, Q) -> float:
    v1 = chain.layers[0]
    pos = {v: i for i, v in enumerate(v1)}
    Q = list(Q)
    if any(v not in pos for v in Q):
        raise ValueError("Q must be a subset of V1")
    if not Q:
        return 0.0
    row = np.zeros((1, chain.n), dtype=bool)
    row[0, [pos[v] for v in Q]] = True
    for i in range(chain.ell):
        row = _mm(row, chain._block(i, (i + 1) % chain.ell))
    return float(row.sum()) / chain.n


def nonspanning_singletons(chain: Chain, nu: float) -> frozenset:
    frac = chain.reach_matrix().sum(axis=1) / chain.n
    return frozenset(v for v, f in zip(chain.layers[0], frac.tolist()) if f <= 1 - nu + _TOL)


def count_nonspanning_singletons(chain: Chain, nu: float) -> int:
    return len(nonspanning_singletons(chain, nu))


@dataclass
class ChainReport:
    verdict: str
    t0: float
    excluded: frozenset
    rates: dict[int, float] = field(default_factory=dict)
    bounds: dict[int, float] = field(default_factory=dict)
    reason: str = ""

    @property
    def consistent(self) -> bool:
        return self.verdict == "consistent"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "t0": self.t0,
            "excluded": sorted(self.excluded),
            "rates": {str(k): v for k, v in self.rates.items()},
            "bounds": {str(k): v for k, v in self.bounds.items()},
            "reason": self.reason,
        }


def check_chain_expanding(chain: Chain, delta: float, gamma: float, nu: float, C: float,
                          t_samples: int, seed: int, grid_size: int = 4) -> ChainReport:
    """Sampled test of the expanding property with ``X`` = non-spanning singletons.

    A "violated" verdict refers to that particular choice of ``X``: more than
    ``delta n`` singletons fail to span. Otherwise random ``t``-subsets of
    ``V1 - X`` are drawn for ``t = ceil(t0) * 2^k`` and a failure rate above
    ``gamma^t`` gives "violated(sampled)".
    """
    for name, val in (("delta", delta), ("gamma", gamma), ("nu", nu)):
        if not 0 < val < 1 / 3:
            raise ValueError(f"{name} must lie in (0, 1/3)")
    n, ell, m = chain.n, chain.ell, chain.m
    t0 = C * n ** (ell + 1) / m ** ell if m else math.inf
    R = chain.reach_matrix()
    frac = R.sum(axis=1) / n
    bad = frac <= 1 - nu + _TOL
    X = frozenset(v for v, b in zip(chain.layers[0], bad.tolist()) if b)
    if len(X) > delta * n + _TOL:
        return ChainReport("violated", t0, X,
                           reason=f"{len(X)} non-spanning singletons exceed delta*n={delta * n:g}")
    pool = np.flatnonzero(~bad)
    rng = np.random.default_rng(seed)
    start = max(1, math.ceil(t0 - _TOL)) if math.isfinite(t0) else len(pool) + 1
    ts = sorted({start * 2 ** k for k in range(grid_size) if start * 2 ** k <= len(pool)})
    rep = ChainReport("consistent", t0, X)
    for t in ts:
        fails = 0
        for _ in range(t_samples):
            pick = rng.choice(pool, t, replace=False)
            if R[pick].any(axis=0).sum() <= (1 - nu) * n + _TOL:
                fails += 1
        rep.rates[t] = fails / t_samples
        rep.bounds[t] = gamma ** t
        if rep.rates[t] > rep.bounds[t] and rep.verdict == "consistent":
            rep.verdict = "violated(sampled)"
            rep.reason = f"t={t}: non-spanning rate {rep.rates[t]:g} > gamma^t={gamma ** t:g}"
    return rep


# ---------------------------------------------------------------------------
# good pairs


@dataclass
class GoodPairReport:
    params: dict
    cond1: dict
    cond2: dict
    cond3: dict
    cond4: dict
    non_expanding: frozenset = frozenset()

    @property
    def ok(self) -> bool:
        return all(c["holds"] for c in (self.cond1, self.cond2, self.cond3, self.cond4))

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "params": self.params,
            "cond1": self.cond1,
            "cond2": self.cond2,
            "cond3": self.cond3,
            "cond4": self.cond4,
            "non_expanding": sorted(self.non_expanding),
        }


def good_pair_thresholds(n: int, q: int, c: float) -> dict:
    p = c * n ** (-1 + 1 / q)
    return {
        "p": p,
        "max_degree_bound": 2 * n * p,
        "bprime_size_bound": n / c ** (q + 2),
        "heavy_degree": 2 * n * p / c ** (q + 1.5),
        "heavy_count_bound": n ** (1 - 1 / (2 * q)) / q,
    }


def check_good_pair(G: Graph, A, B, q: int, nu: float, c: float, b_prime_samples: int,
                    seed: int, n: int | None = None, include_self: bool = False) -> GoodPairReport:
    """Evaluate the four goodness conditions on ``G[A ∪ B]``.

    The condition over all small ``B'`` is sampled, plus one adversarial
    candidate made of the highest-degree vertices.
    """
    a = _members(G, A)
    b = _members(G, B)
    if np.intersect1d(a, b).size:
        raise ValueError("A and B must be disjoint")
    if c <= 1:
        raise ValueError("c must exceed 1")
    if n is None:
        n = len(a)
    th = good_pair_thresholds(n, q, c)

    cond1 = {"holds": len(a) == n, "size": int(len(a)), "n": n}

    census = expansion_census(G, a, b, q, include_self=include_self) if len(a) else {}
    bad = frozenset(v for v, f in census.items() if f < 1 - nu - _TOL)
    cond2 = {"holds": not bad, "violators": len(bad),
             "min_fraction": min(census.values(), default=0.0), "nu": nu}

    ab = np.concatenate([a, b])
    ab.sort()
    sub = G.block(ab, ab)
    deg = sub.sum(axis=1)
    delta = int(deg.max(initial=0))
    cond3 = {"holds": delta < th["max_degree_bound"], "max_degree": delta,
             "bound": th["max_degree_bound"]}

    s_max = math.ceil(th["bprime_size_bound"]) - 1
    s_max = min(s_max, len(ab))
    rng = np.random.default_rng(seed)
    worst, worst_set, tried = 0, [], 0
    candidates = []
    if s_max >= 1:
        top = np.lexsort((ab, -deg))[:s_max]
        candidates.append(np.sort(top))
        for _ in range(b_prime_samples):
            size = int(rng.integers(1, s_max + 1))
            candidates.append(np.sort(rng.choice(len(ab), size, replace=False)))
    for cols in candidates:
        tried += 1
        heavy = int((sub[:, cols].sum(axis=1) >= th["heavy_degree"] - _TOL).sum())
        if heavy > worst:
            worst, worst_set = heavy, ab[cols].tolist()
    cond4 = {"holds": worst <= th["heavy_count_bound"] + _TOL, "mode": "sampled",
             "worst_count": worst, "bound": th["heavy_count_bound"], "samples": tried,
             "max_bprime_size": max(s_max, 0), "witness": worst_set if worst else []}
    params = {"q": q, "nu": nu, "n": n, "c": c, "p": th["p"]}
    return GoodPairReport(params, cond1, cond2, cond3, cond4, bad)


def bad_vertices(G: Graph, A, B, Bprime, q: int, c: float, p: float, n: int | None = None) -> frozenset:
    """``X_1 ∪ ... ∪ X_{q-1}``: vertices of ``A ∪ B`` with too many neighbors in
    ``B'`` (level 1) or in the previous level."""
    a = _members(G, A)
    b = _members(G, B)
    bp = _members(G, Bprime)
    if n is None:
        n = len(a)
    if not np.isin(bp, b).all():
        warnings.warn("B' is not contained in B", stacklevel=2)
    if len(bp) >= n / c ** (q + 2):
        warnings.warn("B' is larger than n / c^(q+2)", stacklevel=2)
    thr = 2 * n * p / c ** (q + 1.5)
    ab = np.sort(np.concatenate([a, b]))
    level = as_mask(G.n, bp)
    out = np.zeros(G.n, dtype=bool)
    for _ in range(q - 1):
        cols = np.flatnonzero(level)
        cnt = G.block(ab, cols).sum(axis=1) if len(cols) else np.zeros(len(ab), dtype=np.int64)
        level = np.zeros(G.n, dtype=bool)
        level[ab[cnt > thr]] = True
        out |= level
    return frozenset(np.flatnonzero(out).tolist())


def robustness_probe(G: Graph, A, B, q: int, nu: float, c: float, deletion_size: int,
                     trials: int, seed: int) -> dict:
    """Non-expanding counts in ``A`` (at ``2 nu``) after deleting random ``B' ⊆ B``."""
    a = _members(G, A)
    b = _members(G, B)
    if deletion_size > len(b):
        raise ValueError("deletion size exceeds |B|")
    n = len(a)
    pr = PoolReach(G, a, b, q)
    rng = np.random.default_rng(seed)
    counts = []
    src = np.arange(n)
    for _ in range(trials):
        gone = np.zeros(len(b), dtype=bool)
        gone[rng.choice(len(b), deletion_size, replace=False)] = True
        frac = pr.matrix(src, forbidden_b=gone).sum(axis=1) / max(n, 1)
        counts.append(int((frac < 1 - 2 * nu - _TOL).sum()))
    budget = n ** (1 - 1 / (2 * q))
    arr = np.array(counts) if counts else np.zeros(0)
    return {
        "counts": counts,
        "mean": float(arr.mean()) if len(arr) else 0.0,
        "p95": float(np.percentile(arr, 95)) if len(arr) else 0.0,
        "max": int(arr.max()) if len(arr) else 0,
        "budget": budget,
        "within_budget": float((arr <= budget).mean()) if len(arr) else 1.0,
        "deletion_size": deletion_size,
        "deletion_bound": n / c ** (q + 2),
    }
