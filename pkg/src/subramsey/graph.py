"""Undirected simple graphs on dense integer vertices, G(n, p) sampling,
q-subdivisions and neighborhood primitives."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

# Above this vertex count the dense boolean adjacency is never materialized.
DENSE_LIMIT = 6000


class Graph:
    """Immutable simple undirected graph stored as CSR with sorted rows.

    Vertices are ``0..n-1``. Build with :meth:`from_edges`.
    """

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray):
        self.n = int(n)
        self.indptr = indptr
        self.indices = indices
        self.indptr.flags.writeable = False
        self.indices.flags.writeable = False
        self.m = int(len(indices) // 2)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]] | np.ndarray) -> "Graph":
        """Build a graph; raises ``ValueError`` on loops, duplicates or out-of-range ends."""
        e = np.asarray(edges if isinstance(edges, np.ndarray) else list(edges), dtype=np.int64)
        if e.size == 0:
            e = e.reshape(0, 2)
        if e.ndim != 2 or e.shape[1] != 2:
            raise ValueError("edges must be pairs")
        if n < 0:
            raise ValueError("negative vertex count")
        if len(e):
            if e.min() < 0 or e.max() >= n:
                raise ValueError("edge endpoint out of range")
            if np.any(e[:, 0] == e[:, 1]):
                raise ValueError("self-loop")
            lo = np.minimum(e[:, 0], e[:, 1])
            hi = np.maximum(e[:, 0], e[:, 1])
            key = lo * max(n, 1) + hi
            if len(np.unique(key)) != len(key):
                raise ValueError("duplicate edge")
        return cls._from_unique(n, e)

    @classmethod
    def _from_unique(cls, n: int, e: np.ndarray) -> "Graph":
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n, indptr, dst.astype(np.int64))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __hash__(self):
        return hash((self.n, self.m, self.indices[:64].tobytes()))

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @cached_property
    def adj(self) -> tuple[frozenset, ...]:
        return tuple(frozenset(self.neighbors(v).tolist()) for v in range(self.n))

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        i = np.searchsorted(row, v)
        return bool(i < len(row) and row[i] == v)

    @cached_property
    def edge_array(self) -> np.ndarray:
        """All edges as an ``(m, 2)`` array with ``u < v``, lexicographically sorted."""
        src = np.repeat(np.arange(self.n), self.degrees)
        keep = src < self.indices
        out = np.stack([src[keep], self.indices[keep]], axis=1)
        out.flags.writeable = False
        return out

    def edges(self) -> list[tuple[int, int]]:
        return [tuple(e) for e in self.edge_array.tolist()]

    @cached_property
    def csr(self) -> sp.csr_matrix:
        data = np.ones(len(self.indices), dtype=np.int8)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    @cached_property
    def dense(self) -> np.ndarray:
        if self.n > DENSE_LIMIT:
            raise MemoryError(f"dense adjacency refused for n={self.n}")
        mat = np.zeros((self.n, self.n), dtype=bool)
        e = self.edge_array
        mat[e[:, 0], e[:, 1]] = True
        mat[e[:, 1], e[:, 0]] = True
        mat.flags.writeable = False
        return mat

    def block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Boolean adjacency sub-matrix ``rows x cols``."""
        if self.n <= DENSE_LIMIT:
            return self.dense[np.ix_(rows, cols)]
        return self.csr[rows][:, cols].toarray().astype(bool)

    def edge_subgraph(self, keep: np.ndarray) -> "Graph":
        """Spanning subgraph on the edges of ``edge_array`` selected by ``keep``."""
        return Graph._from_unique(self.n, self.edge_array[np.asarray(keep)])

    def induced_edges(self, vertices: Iterable[int]) -> np.ndarray:
        mask = as_mask(self.n, vertices)
        e = self.edge_array
        return e[mask[e[:, 0]] & mask[e[:, 1]]]


def as_mask(n: int, vertices) -> np.ndarray:
    if isinstance(vertices, np.ndarray) and vertices.dtype == bool:
        return vertices
    mask = np.zeros(n, dtype=bool)
    idx = np.fromiter(vertices, dtype=np.int64) if not isinstance(vertices, np.ndarray) else vertices
    if len(idx):
        mask[idx] = True
    return mask


def mask_to_set(mask: np.ndarray) -> frozenset:
    return frozenset(np.flatnonzero(mask).tolist())


def neighborhood_mask(G: Graph, mask: np.ndarray) -> np.ndarray:
    """Boolean mask of ``N_G(X)`` for the vertex set ``X`` given as a mask."""
    idx = np.flatnonzero(mask)
    out = np.zeros(G.n, dtype=bool)
    if len(idx) == 0:
        return out
    if G.n <= DENSE_LIMIT:
        return G.dense[idx].any(axis=0)
    out[G.csr[idx].indices] = True
    return out


# ---------------------------------------------------------------------------
# generation


def _decode_pairs(k: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map linear indices of the row-major upper triangle back to ``(u, v)``."""
    # row u starts at u*(2n-u-1)/2
    kf = k.astype(np.float64)
    u = np.floor((2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8 * kf)) / 2).astype(np.int64)
    start = u * (2 * n - u - 1) // 2
    # float rounding can be off by one row near boundaries
    low = start > k
    u[low] -= 1
    start = u * (2 * n - u - 1) // 2
    high = k >= start + (n - u - 1)
    u[high] += 1
    start = u * (2 * n - u - 1) // 2
    v = k - start + u + 1
    return u, v


def gen_gnp(n: int, p: float, seed: int) -> Graph:
    """Sample the binomial random graph G(n, p).

    Geometric skipping for ``p <= 0.1`` (expected O(n + m)), a row-wise
    Bernoulli scan otherwise. Identical ``(n, p, seed)`` give identical graphs.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = np.random.default_rng(seed)
    total = n * (n - 1) // 2
    if total == 0 or p == 0.0:
        return Graph.from_edges(n, np.zeros((0, 2), dtype=np.int64))
    if p == 1.0:
        iu = np.triu_indices(n, 1)
        return Graph._from_unique(n, np.stack(iu, axis=1).astype(np.int64))
    if p <= 0.1:
        chunks = []
        pos = -1
        batch = max(1024, int(total * p * 1.1) + 64)
        while True:
            gaps = rng.geometric(p, size=batch)
            idx = pos + np.cumsum(gaps)
            if idx[-1] >= total:
                chunks.append(idx[idx < total])
                break
            chunks.append(idx)
            pos = int(idx[-1])
        k = np.concatenate(chunks)
        u, v = _decode_pairs(k, n)
        return Graph._from_unique(n, np.stack([u, v], axis=1))
    us, vs = [], []
    for u in range(n - 1):
        hits = np.flatnonzero(rng.random(n - u - 1) < p)
        us.append(np.full(len(hits), u, dtype=np.int64))
        vs.append(hits + u + 1)
    e = np.stack([np.concatenate(us), np.concatenate(vs)], axis=1)
    return Graph._from_unique(n, e)


# ---------------------------------------------------------------------------
# subdivisions


@dataclass(frozen=True)
class SubdivisionMap:
    """Where each original vertex and edge of ``H`` landed in ``H^q``.

    ``paths`` maps an edge ``(u, v)`` with ``u < v`` to its ``q - 1`` internal
    vertices ordered from ``u`` towards ``v``.
    """

    q: int
    branch: tuple[int, ...]
    paths: dict[tuple[int, int], tuple[int, ...]] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "q": self.q,
                "branch": list(self.branch),
                "paths": {f"{u}-{v}": list(p) for (u, v), p in sorted(self.paths.items())},
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SubdivisionMap":
        doc = json.loads(text)
        paths = {}
        for key, val in doc["paths"].items():
            u, v = (int(x) for x in key.split("-"))
            paths[(u, v)] = tuple(val)
        return cls(q=int(doc.get("q", len(next(iter(paths.values()), ())) + 1)),
                   branch=tuple(doc["branch"]), paths=paths)


def subdivide(H: Graph, q: int) -> tuple[Graph, SubdivisionMap]:
    """Replace every edge of ``H`` by a path of length ``q``.

    Branch vertices keep their indices; internal vertices are numbered from
    ``H.n`` on, edge by edge in ``H.edge_array`` order.
    """
    if q < 1:
        raise ValueError("q must be at least 1")
    nxt = H.n
    edges = []
    paths = {}
    for u, v in H.edges():
        inner = tuple(range(nxt, nxt + q - 1))
        nxt += q - 1
        chain = (u, *inner, v)
        edges.extend(zip(chain[:-1], chain[1:]))
        paths[(u, v)] = inner
    sub = Graph.from_edges(nxt, edges)
    return sub, SubdivisionMap(q=q, branch=tuple(range(H.n)), paths=paths)


def contract_subdivision(Hq: Graph, smap: SubdivisionMap) -> Graph:
    """Recover ``H`` from ``H^q`` by contracting each recorded path.

    Raises ``ValueError`` when a recorded path is not present in ``Hq``.
    """
    branch = list(smap.branch)
    pos = {b: i for i, b in enumerate(branch)}
    edges = []
    for (u, v), inner in smap.paths.items():
        chain = (branch[u], *inner, branch[v])
        for a, b in zip(chain[:-1], chain[1:]):
            if not Hq.has_edge(a, b):
                raise ValueError(f"path for edge {u}-{v} broken at {a}-{b}")
        edges.append((pos[branch[u]], pos[branch[v]]))
    return Graph.from_edges(len(branch), edges)


# ---------------------------------------------------------------------------
# neighborhoods


def kth_neighborhood(G: Graph, v: int, k: int, restrict=None) -> frozenset:
    """Endpoints of walks of length exactly ``k`` from ``v``.

    With ``restrict`` the intermediate walk vertices must lie in it; the start
    and the final endpoints are unconstrained.
    """
    if not 0 <= v < G.n:
        raise ValueError("vertex out of range")
    cur = np.zeros(G.n, dtype=bool)
    cur[v] = True
    rmask = None if restrict is None else as_mask(G.n, restrict)
    for step in range(k):
        cur = neighborhood_mask(G, cur)
        if rmask is not None and step < k - 1:
            cur &= rmask
    return mask_to_set(cur)


def count_edges_between(G: Graph, U, W) -> int:
    umask = as_mask(G.n, U)
    wmask = as_mask(G.n, W)
    if np.any(umask & wmask):
        raise ValueError("U and W must be disjoint")
    e = G.edge_array
    a, b = umask[e[:, 0]], wmask[e[:, 1]]
    c, d = wmask[e[:, 0]], umask[e[:, 1]]
    return int(np.count_nonzero((a & b) | (c & d)))


def max_degree(G: Graph) -> int:
    return int(G.degrees.max()) if G.n else 0


# ---------------------------------------------------------------------------
# standard families


def complete_graph(n: int) -> Graph:
    return gen_gnp(n, 1.0, 0)


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise ValueError("a cycle needs at least 3 vertices")
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def star_graph(leaves: int) -> Graph:
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def random_regular(n: int, d: int, seed: int, max_tries: int = 10_000) -> Graph:
    """Uniform simple ``d``-regular graph by the pairing model with rejection.

    For ``d > (n-1)/2`` the complement of a uniform ``(n-1-d)``-regular graph
    is returned instead, which is again uniform and far cheaper to sample.
    """
    if (n * d) % 2 or d >= n or d < 0:
        raise ValueError(f"no simple {d}-regular graph on {n} vertices")
    if 2 * d > n - 1:
        comp = random_regular(n, n - 1 - d, seed, max_tries)
        full = complete_graph(n).edge_array
        keep = ~np.isin(full[:, 0] * n + full[:, 1], comp.edge_array[:, 0] * n + comp.edge_array[:, 1])
        return Graph._from_unique(n, full[keep])
    if d == 0:
        return Graph.from_edges(n, np.zeros((0, 2), dtype=np.int64))
    rng = np.random.default_rng(seed)
    points = np.repeat(np.arange(n), d)
    for _ in range(max_tries):
        perm = rng.permutation(points).reshape(-1, 2)
        if np.any(perm[:, 0] == perm[:, 1]):
            continue
        lo = np.minimum(perm[:, 0], perm[:, 1])
        hi = np.maximum(perm[:, 0], perm[:, 1])
        if len(np.unique(lo * n + hi)) != len(lo):
            continue
        return Graph._from_unique(n, np.stack([lo, hi], axis=1))
    raise RuntimeError("pairing model kept producing multigraphs")
