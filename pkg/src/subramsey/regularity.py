"""Lower-regularity verdicts and the monochromatic star-configuration finder."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .coloring import EdgeColoring
from .graph import Graph, as_mask, count_edges_between

EXHAUSTIVE_LIMIT = 14
_TOL = 1e-12


class InfeasibleConfig(ValueError):
    """Requested layer sizes cannot fit in the host graph."""


def _sorted_members(n: int, S) -> np.ndarray:
    return np.flatnonzero(as_mask(n, S))


def density(G: Graph, U, W) -> float:
    u = _sorted_members(G.n, U)
    w = _sorted_members(G.n, W)
    if len(u) == 0 or len(w) == 0:
        raise ValueError("density needs two nonempty sides")
    return count_edges_between(G, u, w) / (len(u) * len(w))


def min_subset_size(eps: float, size: int) -> int:
    return max(1, math.ceil(eps * size - 1e-9))


@dataclass
class RegularityVerdict:
    holds: bool
    mode: str
    pairs_checked: int
    witness_u: frozenset | None = None
    witness_w: frozenset | None = None

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "mode": self.mode,
            "pairs_checked": self.pairs_checked,
            "witness_u": None if self.witness_u is None else sorted(self.witness_u),
            "witness_w": None if self.witness_w is None else sorted(self.witness_w),
        }


def _check_sides(G: Graph, U, W) -> tuple[np.ndarray, np.ndarray]:
    u = _sorted_members(G.n, U)
    w = _sorted_members(G.n, W)
    if len(u) == 0 or len(w) == 0:
        raise ValueError("both sides must be nonempty")
    if np.intersect1d(u, w).size:
        raise ValueError("U and W must be disjoint")
    return u, w


def is_lower_regular_exact(G: Graph, U, W, eps: float, p: float,
                           limit: int = EXHAUSTIVE_LIMIT) -> RegularityVerdict:
    """Decide (eps, p)-lower-regularity of ``(U, W)`` exhaustively.

    Every qualifying ``U'`` is enumerated; for each size ``k`` the sparsest
    ``W'`` of that size consists of the ``k`` vertices with fewest neighbors in
    ``U'``, so scanning sorted prefix sums covers every ``W'`` exactly.
    """
    u, w = _check_sides(G, U, W)
    if len(u) > limit or len(w) > limit:
        raise ValueError(f"sides exceed the exhaustive limit {limit}; use sampled mode")
    bip = G.block(u, w).astype(np.int64)
    nu, nw = len(u), len(w)
    ku, kw = min_subset_size(eps, nu), min_subset_size(eps, nw)

    codes = np.arange(1, 1 << nu, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(nu)) & 1).astype(bool)
    sizes = bits.sum(axis=1)
    keep = sizes >= ku
    bits, sizes = bits[keep], sizes[keep]
    # size first, then lexicographic by member indices
    lex = np.lexsort(tuple((~bits[:, i]).astype(np.int8) for i in range(nu - 1, -1, -1)) + (sizes,))
    bits, sizes = bits[lex], sizes[lex]

    degs = bits.astype(np.int64) @ bip                  # |N(w) ∩ U'| for every U', w
    order = np.argsort(degs, axis=1, kind="stable")
    prefix = np.cumsum(np.take_along_axis(degs, order, axis=1), axis=1)
    ks = np.arange(1, nw + 1)
    thresh = (1 - eps) * p * sizes[:, None] * ks[None, :]
    bad = (prefix < thresh - _TOL) & (ks[None, :] >= kw)

    n_wsub = sum(math.comb(nw, k) for k in range(kw, nw + 1))
    checked = int(len(sizes)) * n_wsub
    rows = np.flatnonzero(bad.any(axis=1))
    if len(rows) == 0:
        return RegularityVerdict(True, "exact", checked)
    i = rows[0]
    k = int(np.flatnonzero(bad[i])[0]) + 1
    wu = frozenset(u[bits[i]].tolist())
    ww = frozenset(w[order[i, :k]].tolist())
    return RegularityVerdict(False, "exact", checked, wu, ww)


def _sparsest_side(bip: np.ndarray, rows: np.ndarray, k_min: int, eps: float, p: float):
    """Given a row subset, the column subset of each size minimising the edge
    count is a prefix of the columns sorted by degree into the rows. Returns the
    first violating prefix length, or 0."""
    deg = bip[rows].sum(axis=0)
    order = np.argsort(deg, kind="stable")
    prefix = np.cumsum(deg[order])
    ks = np.arange(1, len(deg) + 1)
    bad = (prefix < (1 - eps) * p * len(rows) * ks - _TOL) & (ks >= k_min)
    hit = np.flatnonzero(bad)
    return (int(hit[0]) + 1, order) if len(hit) else (0, order)


def is_lower_regular_sampled(G: Graph, U, W, eps: float, p: float, trials: int,
                             seed: int, rounds: int = 2) -> RegularityVerdict:
    """One-sided check: ``holds`` means no violating subset pair was found.

    Each trial draws a random ``U'`` of qualifying size, takes the sparsest
    ``W'`` of every size for it, then alternates sides for ``rounds`` more
    steps. Any reported witness is a genuine violation.
    """
    u, w = _check_sides(G, U, W)
    bip = G.block(u, w).astype(np.int64)
    rng = np.random.default_rng(seed)
    ku, kw = min_subset_size(eps, len(u)), min_subset_size(eps, len(w))
    for t in range(trials):
        su = int(rng.integers(ku, len(u) + 1))
        iu = np.sort(rng.choice(len(u), su, replace=False))
        for _ in range(rounds + 1):
            k, order = _sparsest_side(bip, iu, kw, eps, p)
            if k:
                return RegularityVerdict(False, "sampled", t + 1,
                                         frozenset(u[iu].tolist()), frozenset(w[order[:k]].tolist()))
            # sparsest W' at the smallest allowed size, then the best U' against it
            iw = order[:kw]
            k, order_u = _sparsest_side(bip.T, iw, ku, eps, p)
            if k:
                return RegularityVerdict(False, "sampled", t + 1,
                                         frozenset(u[order_u[:k]].tolist()), frozenset(w[iw].tolist()))
            iu = np.sort(order_u[:max(ku, su // 2)])
    return RegularityVerdict(True, "sampled", trials)


# ---------------------------------------------------------------------------
# star configurations


@dataclass
class StarConfig:
    """One shared layer plus ``D`` branches of ``q - 1`` layers, all in one color.

    ``subgraph`` is the cleaned monochromatic graph G' holding only the
    star-pattern pair edges after down-sampling.
    """

    color: int
    v1: tuple[int, ...]
    branches: tuple[tuple[tuple[int, ...], ...], ...]
    p_prime: float
    subgraph: Graph
    report: dict = field(default_factory=dict)

    @property
    def layers(self) -> list[tuple[int, ...]]:
        out = [self.v1]
        for br in self.branches:
            out.extend(br)
        return out

    @property
    def pools(self) -> list[frozenset]:
        """``B_t``: union of the layers of branch ``t``."""
        return [frozenset(v for layer in br for v in layer) for br in self.branches]

    def star_pairs(self) -> list[tuple[int, int]]:
        return star_pairs(len(self.branches), len(self.branches[0]) + 1 if self.branches else 1)

    def to_json(self) -> str:
        return json.dumps({
            "color": self.color,
            "v1": list(self.v1),
            "branches": [[list(layer) for layer in br] for br in self.branches],
            "p_prime": self.p_prime,
            "report": self.report,
        })


def star_pairs(D: int, q: int) -> list[tuple[int, int]]:
    """Layer-index pairs of the star pattern: V1-V2^t and V_k^t-V_{k+1}^t."""
    pairs = []
    for t in range(D):
        base = 1 + t * (q - 1)
        prev = 0
        for k in range(q - 1):
            pairs.append((prev, base + k))
            prev = base + k
    return pairs


class _Search:
    """Mutable local-search state over K disjoint layers of equal size."""

    def __init__(self, adj: np.ndarray, layers: list[np.ndarray], pairs):
        self.adj = adj
        self.layers = layers
        self.pairs = pairs
        n = adj.shape[0]
        self.deg = np.stack([adj[:, L].sum(axis=1) for L in layers], axis=1).astype(np.int64)
        self.used = np.zeros(n, dtype=bool)
        for L in layers:
            self.used[L] = True

    def pair_edges(self) -> np.ndarray:
        return np.array([self.deg[self.layers[i], j].sum() for i, j in self.pairs], dtype=np.int64)

    def best_swap(self, allow_plateau: bool):
        """Lexicographically smallest (out, in) swap improving the minimum pair count."""
        e = self.pair_edges()
        cur = e.min()
        weakest = [k for k in range(len(e)) if e[k] == cur]
        touched = sorted({x for k in weakest for x in self.pairs[k]})
        free = np.flatnonzero(~self.used)
        if len(free) == 0:
            return None
        cands = []
        for X in touched:
            for x in self.layers[X].tolist():
                cands.append((x, X))
        cands.sort()
        for x, X in cands:
            new = np.repeat(e[None, :], len(free), axis=0)
            for k, (i, j) in enumerate(self.pairs):
                if X in (i, j):
                    Y = j if i == X else i
                    new[:, k] = e[k] - self.deg[x, Y] + self.deg[free, Y]
            nmin = new.min(axis=1)
            ok = nmin > cur
            if allow_plateau and not ok.any():
                ok = (nmin == cur) & (new.sum(axis=1) > e.sum())
            hit = np.flatnonzero(ok)
            if len(hit):
                return x, X, int(free[hit[0]])
        return None

    def apply(self, x: int, X: int, u: int) -> None:
        L = self.layers[X]
        L[L == x] = u
        self.layers[X] = np.sort(L)
        self.used[x] = False
        self.used[u] = True
        self.deg[:, X] += self.adj[:, u].astype(np.int64) - self.adj[:, x].astype(np.int64)


def _thin_pair(ea: np.ndarray, eb: np.ndarray, s: int, target: int, cap: int,
               rng: np.random.Generator) -> np.ndarray | None:
    """Choose exactly ``target`` of the pair's edges with every degree ``<= cap``."""
    k = len(ea)
    da = np.bincount(ea, minlength=s)
    db = np.bincount(eb, minlength=s)
    alive = np.ones(k, dtype=bool)
    order = rng.permutation(k)
    for both in (True, False):
        if da.max(initial=0) <= cap and db.max(initial=0) <= cap:
            break
        for j in order.tolist():
            if not alive[j]:
                continue
            a, b = ea[j], eb[j]
            oa, ob = da[a] > cap, db[b] > cap
            if (oa and ob) if both else (oa or ob):
                alive[j] = False
                da[a] -= 1
                db[b] -= 1
    left = np.flatnonzero(alive)
    if len(left) < target:
        return None
    drop = rng.choice(left, len(left) - target, replace=False)
    alive[drop] = False
    return np.flatnonzero(alive)


def _clean(adj: np.ndarray, layers: list[np.ndarray], pairs, s: int, floor_p: float,
           rng: np.random.Generator, step: float = 0.05):
    blocks = []
    for i, j in pairs:
        a, b = np.nonzero(adj[np.ix_(layers[i], layers[j])])
        blocks.append((a, b))
    counts = np.array([len(a) for a, _ in blocks])
    top = counts.min() / (s * s)
    if top <= 0 or top < floor_p:
        return None
    f = 1.0
    while top * f >= floor_p and top * f > 0:
        pp = top * f
        f -= step
        target = int(math.floor(s * s * pp + 1e-9))
        cap = int(math.floor(1.25 * s * pp + 1e-9))
        if target == 0 or cap == 0:
            continue
        feasible = all(
            np.minimum(np.bincount(a, minlength=s), cap).sum() >= target
            and np.minimum(np.bincount(b, minlength=s), cap).sum() >= target
            for a, b in blocks)
        if not feasible:
            continue
        kept = []
        for a, b in blocks:
            sel = _thin_pair(a, b, s, target, cap, rng)
            if sel is None:
                break
            kept.append(sel)
        else:
            return pp, target, cap, blocks, kept
    return None


def find_star_config(G: Graph, coloring: EdgeColoring, r: int, D: int, q: int, mu: float,
                     eps: float, min_density_factor: float, seed: int, effort_budget: int,
                     *, p: float | None = None, color: int | None = None,
                     all_pairs: bool = False, plateau_limit: int = 50,
                     regularity_trials: int = 100) -> StarConfig | None:
    """Search one color class for the monochromatic star configuration.

    Random disjoint layers of size ``round(mu * n)`` are improved by vertex
    swaps until every star-pattern pair has density at least
    ``min_density_factor * p``; the pairs are then thinned to a common density
    ``p'`` with exact edge counts and degree caps. Returns ``None`` when the
    effort budget runs out. ``p`` defaults to the edge density of ``G``.
    """
    if r < 1 or coloring.r != r:
        raise ValueError("coloring does not match r")
    if D < 1 or q < 2:
        raise ValueError("need D >= 1 and q >= 2")
    n = G.n
    K = (q - 1) * D + 1
    s = int(round(mu * n))
    if s < 1 or s * K > n:
        raise InfeasibleConfig(f"{K} layers of size {s} do not fit in {n} vertices")
    if p is None:
        p = G.m / (n * (n - 1) / 2) if n > 1 else 0.0
    floor_p = min_density_factor * p
    if color is None:
        color = coloring.by_size()[0]
    Gc = coloring.class_graph(G, color)
    adj = Gc.dense
    pairs = [(i, j) for i in range(K) for j in range(i + 1, K)] if all_pairs else star_pairs(D, q)
    rng = np.random.default_rng(seed)

    effort = 0
    restart = 0
    while effort < effort_budget:
        effort += 1
        perm = rng.permutation(n)[: K * s]
        layers = [np.sort(perm[i * s:(i + 1) * s]) for i in range(K)]
        state = _Search(adj, layers, pairs)
        plateau = 0
        while effort < effort_budget and state.pair_edges().min() < floor_p * s * s:
            move = state.best_swap(allow_plateau=plateau < plateau_limit)
            effort += 1
            if move is None:
                break
            before = state.pair_edges().min()
            state.apply(*move)
            plateau = plateau + 1 if state.pair_edges().min() == before else 0
        pre = state.pair_edges() / (s * s)
        if pre.min() <= 0 or pre.min() < floor_p:
            restart += 1
            continue
        cleaned = _clean(adj, state.layers, pairs, s, floor_p, rng)
        if cleaned is None:
            restart += 1
            continue
        pp, target, cap, blocks, kept = cleaned
        edges = []
        for (i, j), (a, b), sel in zip(pairs, blocks, kept):
            gu = state.layers[i][a[sel]]
            gv = state.layers[j][b[sel]]
            edges.append(np.stack([np.minimum(gu, gv), np.maximum(gu, gv)], axis=1))
        sub = Graph.from_edges(n, np.concatenate(edges))
        layers = [tuple(L.tolist()) for L in state.layers]
        branches = tuple(tuple(layers[1 + t * (q - 1) + k] for k in range(q - 1)) for t in range(D))
        cfg = StarConfig(
            color=color, v1=layers[0], branches=branches, p_prime=pp, subgraph=sub,
            report={
                "p": p,
                "min_density_required": floor_p,
                "pre_densities": [float(x) for x in pre],
                "pair_edges": target,
                "degree_cap": cap,
                "pairs": [list(pq) for pq in pairs],
                "restarts": restart,
                "effort": effort,
            })
        check = verify_star_config(Gc, cfg, eps=eps, min_density=floor_p,
                                   trials=regularity_trials, seed=seed + restart)
        cfg.report["verification"] = check
        if check["ok"]:
            return cfg
        restart += 1
    return None


def verify_star_config(host: Graph, cfg: StarConfig, eps: float, min_density: float,
                       trials: int = 100, seed: int = 0) -> dict:
    """Re-check the four configuration properties from scratch against ``host``.

    ``host`` is the color class the configuration was drawn from.
    """
    G = cfg.subgraph
    layers = [np.array(L, dtype=np.int64) for L in cfg.layers]
    s = len(layers[0])
    defects = []
    if any(len(L) != s for L in layers):
        defects.append("layer sizes differ")
    allv = np.concatenate(layers)
    if len(np.unique(allv)) != len(allv):
        defects.append("layers overlap")
    e = G.edge_array
    host_e = host.edge_array
    hk = host_e[:, 0] * host.n + host_e[:, 1]
    if len(e) and not np.isin(e[:, 0] * host.n + e[:, 1], hk).all():
        defects.append("subgraph edge outside the color class")
    target = int(math.floor(s * s * cfg.p_prime + 1e-9))
    cap = 1.25 * s * cfg.p_prime + 1e-9
    pairs = cfg.star_pairs()
    reg = []
    for k, (i, j) in enumerate(pairs):
        cnt = count_edges_between(G, layers[i], layers[j])
        if cnt != target:
            defects.append(f"pair {i}-{j} has {cnt} edges, expected {target}")
        verdict = is_lower_regular_sampled(G, layers[i], layers[j], eps, min_density,
                                           trials, seed + k)
        reg.append(verdict.holds)
        if not verdict.holds:
            defects.append(f"pair {i}-{j} has a sparse subset pair")
    if min_density > cfg.p_prime + 1e-12:
        defects.append("p' below the required density")
    for L in layers:
        deg_in = G.block(allv, L).sum(axis=1)
        if deg_in.max(initial=0) > cap:
            defects.append("degree cap exceeded")
            break
    return {"ok": not defects, "defects": defects, "regular_sampled": reg}
