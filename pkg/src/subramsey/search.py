"""Direct backtracking search for a copy of H^q in an arbitrary host graph.

Used as the harness fallback (bounded by a node-expansion budget) and, with
no budget, as an exhaustive decision procedure on toy instances.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

import numpy as np

from .coloring import EdgeColoring
from .embedder import Embedding
from .graph import Graph, subdivide


class _Exhausted(Exception):
    pass


@dataclass
class SearchOutcome:
    embedding: Embedding | None
    expansions: int
    complete: bool  # False when the budget ran out before the search finished

    @property
    def found(self) -> bool:
        return self.embedding is not None


def _pattern_order(P: Graph, branch_count: int) -> tuple[list[int], list[int | None]]:
    # BFS per component from its highest-degree branch vertex, so paths grow outwards
    seen = [False] * P.n
    order, parent = [], []
    roots = sorted(range(P.n), key=lambda x: (x >= branch_count, -P.degree(x), x))
    for root in roots:
        if seen[root]:
            continue
        seen[root] = True
        queue = deque([(root, None)])
        while queue:
            x, par = queue.popleft()
            order.append(x)
            parent.append(par)
            for y in P.neighbors(x).tolist():
                if not seen[y]:
                    seen[y] = True
                    queue.append((y, x))
    return order, parent


def find_subdivision(G: Graph, H: Graph, q: int, budget: int | None = 10**6,
                     seed: int | None = None) -> SearchOutcome:
    """Find a (not necessarily induced) copy of ``H^q`` in ``G``.

    Candidates are tried in index order, or shuffled when ``seed`` is given.
    ``budget=None`` makes the search exhaustive.
    """
    P, smap = subdivide(H, q)
    order, parent = _pattern_order(P, H.n)
    pos = {x: i for i, x in enumerate(order)}
    earlier = [[y for y in P.neighbors(x).tolist() if pos[y] < pos[x]] for x in order]
    need = [P.degree(x) for x in order]
    gadj = G.adj
    gdeg = G.degrees
    rng = np.random.default_rng(seed) if seed is not None else None
    everyone = [v for v in range(G.n)]
    assign: dict[int, int] = {}
    used: set[int] = set()
    expansions = 0

    def candidates(i: int):
        par = parent[i]
        pool = everyone if par is None else sorted(gadj[assign[par]])
        pool = [y for y in pool if y not in used and gdeg[y] >= need[i]]
        if rng is not None:
            rng.shuffle(pool)
        return pool

    def rec(i: int) -> bool:
        nonlocal expansions
        if i == len(order):
            return True
        x = order[i]
        for y in candidates(i):
            expansions += 1
            if budget is not None and expansions > budget:
                raise _Exhausted
            nbrs = gadj[y]
            if all(assign[z] in nbrs for z in earlier[i]):
                assign[x] = y
                used.add(y)
                if rec(i + 1):
                    return True
                del assign[x]
                used.discard(y)
        return False

    try:
        ok = rec(0) if P.n else True
    except _Exhausted:
        return SearchOutcome(None, expansions, False)
    if not ok:
        return SearchOutcome(None, expansions, True)
    image = {v: assign[v] for v in range(H.n)}
    paths = {}
    for (u, v), inner in smap.paths.items():
        paths[(u, v)] = (assign[u], *(assign[x] for x in inner), assign[v])
    return SearchOutcome(Embedding(image, paths, {"expansions": expansions}), expansions, True)


def is_ramsey_exhaustive(G: Graph, H: Graph, q: int, r: int, max_edges: int = 20):
    """Decide whether every r-coloring of ``G`` has a monochromatic ``H^q``.

    Returns ``(True, None)`` or ``(False, coloring)`` with a coloring that avoids
    it. Only for ``G.m <= max_edges``; the first edge is pinned to color 0.
    """
    if G.m > max_edges:
        raise ValueError(f"exhaustive colorings need m <= {max_edges}, got {G.m}")
    if r < 1:
        raise ValueError("r must be at least 1")
    if G.m == 0:
        found = find_subdivision(G, H, q, None).found
        return found, None if found else EdgeColoring(r, np.zeros(0, dtype=np.int64))
    cache: dict[bytes, bool] = {}
    for rest in itertools.product(range(r), repeat=G.m - 1):
        colors = np.array((0, *rest), dtype=np.int64)
        col = EdgeColoring(r, colors)
        hit = False
        for i in range(r):
            mask = colors == i
            key = np.packbits(mask).tobytes()
            if key not in cache:
                cache[key] = find_subdivision(G.edge_subgraph(mask), H, q, None).found
            if cache[key]:
                hit = True
                break
        if not hit:
            return False, col
    return True, None
