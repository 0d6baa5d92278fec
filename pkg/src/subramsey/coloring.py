"""Edge colorings and the coloring strategies used by the Ramsey harness."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .graph import Graph

STRATEGIES = ("uniform", "balanced-round-robin", "path-breaker")


@dataclass(frozen=True)
class EdgeColoring:
    """Color index in ``[r]`` for every edge, aligned with ``G.edge_array``."""

    r: int
    colors: np.ndarray

    def class_sizes(self) -> list[int]:
        return np.bincount(self.colors, minlength=self.r).tolist()

    def class_graph(self, G: Graph, color: int) -> Graph:
        return G.edge_subgraph(self.colors == color)

    def color_of(self, G: Graph, u: int, v: int) -> int:
        if u > v:
            u, v = v, u
        e = G.edge_array
        lo = np.searchsorted(e[:, 0], u, side="left")
        hi = np.searchsorted(e[:, 0], u, side="right")
        j = lo + np.searchsorted(e[lo:hi, 1], v)
        if j >= hi or e[j, 1] != v:
            raise KeyError(f"{u}-{v} is not an edge")
        return int(self.colors[j])

    def by_size(self) -> list[int]:
        """Colors ordered by decreasing class size, ties by index."""
        sizes = self.class_sizes()
        return sorted(range(self.r), key=lambda i: (-sizes[i], i))


def color_edges(G: Graph, r: int, strategy: str, seed: int) -> EdgeColoring:
    if r < 1:
        raise ValueError("r must be at least 1")
    rng = np.random.default_rng(seed)
    m = G.m
    if strategy == "uniform":
        colors = rng.integers(0, r, size=m) if r > 1 else np.zeros(m, dtype=np.int64)
    elif strategy == "balanced-round-robin":
        colors = np.empty(m, dtype=np.int64)
        colors[rng.permutation(m)] = np.arange(m) % r
    elif strategy == "path-breaker":
        colors = _layer_parity(G, r, rng)
    else:
        raise ValueError(f"unknown coloring strategy {strategy!r}")
    return EdgeColoring(r=r, colors=np.asarray(colors, dtype=np.int64))


def _layer_parity(G: Graph, r: int, rng: np.random.Generator) -> np.ndarray:
    # BFS layers from random roots; an edge takes the color of its lower layer mod r,
    # so a monochromatic path cannot cross more than one layer boundary.
    layer = np.full(G.n, -1, dtype=np.int64)
    for root in rng.permutation(G.n).tolist():
        if layer[root] >= 0:
            continue
        layer[root] = 0
        queue = deque([root])
        while queue:
            x = queue.popleft()
            for y in G.neighbors(x).tolist():
                if layer[y] < 0:
                    layer[y] = layer[x] + 1
                    queue.append(y)
    e = G.edge_array
    return np.minimum(layer[e[:, 0]], layer[e[:, 1]]) % r
