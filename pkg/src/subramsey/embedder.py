"""Greedy embedding of a q-subdivision into a shared first layer ``A`` and
``D`` vertex pools ``B_1..B_D``, with discard-and-repair of vertices whose
images stop expanding."""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .expansion import PoolReach, _TOL
from .graph import Graph, as_mask

POLICIES = ("greedy", "first", "random")


@dataclass
class EmbeddingState:
    """Bookkeeping of one run. ``S`` and ``S_t`` hold host vertices and never shrink."""

    S: set = field(default_factory=set)
    S_t: list = field(default_factory=list)
    Y: set = field(default_factory=set)
    image: dict = field(default_factory=dict)
    path_image: dict = field(default_factory=dict)
    discard_log: list = field(default_factory=list)
    step_count: int = 0
    transcript: list = field(default_factory=list)

    def snapshot(self) -> dict:
        return {
            "S": sorted(self.S),
            "S_t": [sorted(s) for s in self.S_t],
            "Y": sorted(self.Y),
            "image": {str(k): v for k, v in sorted(self.image.items())},
        }


@dataclass
class Embedding:
    image: dict[int, int]
    paths: dict[tuple[int, int], tuple[int, ...]]
    stats: dict = field(default_factory=dict)

    def host_edges(self) -> list[tuple[int, int]]:
        out = []
        for path in self.paths.values():
            out.extend((min(a, b), max(a, b)) for a, b in zip(path[:-1], path[1:]))
        return sorted(out)

    def to_json(self) -> str:
        return json.dumps({
            "branch": {str(k): v for k, v in sorted(self.image.items())},
            "paths": {f"{u}-{v}": list(p) for (u, v), p in sorted(self.paths.items())},
            "stats": self.stats,
        })

    @classmethod
    def from_json(cls, text: str) -> "Embedding":
        doc = json.loads(text)
        paths = {}
        for key, val in doc["paths"].items():
            u, v = (int(x) for x in key.split("-"))
            paths[(u, v)] = tuple(val)
        return cls({int(k): v for k, v in doc["branch"].items()}, paths, doc.get("stats", {}))


class EmbeddingFailed(RuntimeError):
    """Raised with ``reason`` in {"no-connector", "step-budget", "bad-input"} and the final state."""

    def __init__(self, reason: str, state: EmbeddingState, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.state = state
        self.detail = detail


class _Run:
    def __init__(self, G: Graph, A, B, q: int, nu: float, state: EmbeddingState,
                 policy: str = "greedy", seed: int = 0, include_self: bool = False):
        if policy not in POLICIES:
            raise ValueError(f"unknown policy {policy!r}")
        self.G = G
        self.q = q
        self.nu = nu
        self.policy = policy
        self.rng = np.random.default_rng(seed)
        self.include_self = include_self
        self.reach = [PoolReach(G, A, Bt, q) for Bt in B]
        self.a = self.reach[0].a if self.reach else np.flatnonzero(as_mask(G.n, A))
        self.apos = {int(v): i for i, v in enumerate(self.a.tolist())}
        self.state = state
        while len(state.S_t) < len(B):
            state.S_t.append(set())
        self._cache: dict[int, tuple[int, dict]] = {}

    @property
    def D(self) -> int:
        return len(self.reach)

    def s_mask(self) -> np.ndarray:
        m = np.zeros(len(self.a), dtype=bool)
        if self.state.S:
            m[[self.apos[x] for x in self.state.S]] = True
        return m

    def st_mask(self, t: int) -> np.ndarray:
        pr = self.reach[t]
        m = np.zeros(len(pr.b), dtype=bool)
        if self.state.S_t[t]:
            m[[pr.bpos[x] for x in self.state.S_t[t]]] = True
        return m

    def fractions(self, t: int, vertices) -> dict[int, float]:
        """Fraction of ``A`` reached from each vertex through ``B_t - S_t`` (cached per |S_t|)."""
        version = len(self.state.S_t[t])
        cached_version, table = self._cache.get(t, (-1, {}))
        if cached_version != version:
            table = {}
        todo = [v for v in vertices if v not in table]
        if todo:
            src = np.array([self.apos[v] for v in todo], dtype=np.int64)
            rows = self.reach[t].matrix(src, forbidden_b=self.st_mask(t),
                                        include_self=self.include_self)
            for v, c in zip(todo, rows.sum(axis=1).tolist()):
                table[v] = c / len(self.a)
        self._cache[t] = (version, table)
        return {v: table[v] for v in vertices}

    def _score(self, cands: list[int]) -> int:
        if self.policy == "first" or len(cands) == 1:
            return cands[0]
        if self.policy == "random":
            return cands[int(self.rng.integers(len(cands)))]
        worst = np.full(len(cands), np.inf)
        for t in range(self.D):
            fr = self.fractions(t, cands)
            worst = np.minimum(worst, [fr[v] for v in cands])
        return cands[int(np.argmax(worst))]

    def fresh_vertex(self) -> int | None:
        cands = [int(v) for v in self.a.tolist() if v not in self.state.S]
        return self._score(cands) if cands else None

    def reach_row(self, w_img: int, t: int) -> np.ndarray:
        pr = self.reach[t]
        return pr.matrix([self.apos[w_img]], forbidden_b=self.st_mask(t),
                         forbidden_a=self.s_mask())[0]

    def connector(self, assignment: dict[int, int]):
        """Pick ``a`` reachable from every assigned image and trace the paths."""
        common = ~self.s_mask()
        for w, t in assignment.items():
            common &= self.reach_row(self.state.image[w], t)
        cands = [int(v) for v in self.a[common].tolist()]
        if not cands:
            return None
        a = self._score(cands)
        paths = {}
        for w, t in assignment.items():
            pr = self.reach[t]
            path = pr.path(self.apos[self.state.image[w]], self.apos[a], ~self.st_mask(t))
            if path is None:
                raise AssertionError("layered reach promised a path that tracing cannot find")
            paths[w] = path
        return a, paths

    def assignments(self, neigh: list[int], limit: int = 24):
        """Default pairing first, then the remaining injective assignments."""
        free = [len(self.reach[t].b) - len(self.state.S_t[t]) for t in range(self.D)]
        sizes = {}
        for w in neigh:
            img = self.state.image[w]
            sizes[w] = sum(int(self.reach_row(img, t).sum()) for t in range(self.D))
        by_need = sorted(neigh, key=lambda w: (sizes[w], w))
        by_room = sorted(range(self.D), key=lambda t: (-free[t], t))
        first = dict(zip(by_need, by_room))
        yield first
        seen = 1
        for perm in itertools.permutations(range(self.D), len(neigh)):
            cand = dict(zip(neigh, perm))
            if cand == first:
                continue
            if seen >= limit:
                return
            seen += 1
            yield cand


def find_connector(G: Graph, state: EmbeddingState, assignment: dict[int, int], A, B, q: int,
                   nu: float, policy: str = "greedy", seed: int = 0):
    """Step 3 for one vertex: ``(a, {w: path})`` or ``None`` if no ``a`` works.

    ``assignment`` maps each embedded neighbor ``w`` to its pool index ``t(w)``;
    the map must be injective. Paths run from ``image[w]`` to ``a``.
    """
    if len(set(assignment.values())) != len(assignment):
        raise ValueError("pool assignment must be injective")
    run = _Run(G, A, B, q, nu, state, policy, seed)
    return run.connector(assignment)


def _check_input(G: Graph, A, B, H: Graph, q: int, state: EmbeddingState) -> None:
    masks = [as_mask(G.n, A)] + [as_mask(G.n, Bt) for Bt in B]
    total = np.zeros(G.n, dtype=np.int64)
    for m in masks:
        total += m
    if np.any(total > 1):
        raise EmbeddingFailed("bad-input", state, "A and the pools must be pairwise disjoint")
    if q < 2:
        raise EmbeddingFailed("bad-input", state, "q must be at least 2")
    if H.n and int(H.degrees.max()) > len(B):
        raise EmbeddingFailed("bad-input", state, "max degree of H exceeds the number of pools")
    if not masks[0].any():
        raise EmbeddingFailed("bad-input", state, "A is empty")


def embed_subdivision(G: Graph, A, B, H: Graph, q: int, nu: float, max_steps: int | None = None,
                      seed: int = 0, policy: str = "greedy", snapshots: bool = False,
                      include_self: bool = False, state: EmbeddingState | None = None) -> Embedding:
    """Embed ``H^q`` with branch vertices in ``A`` and the paths of different
    edges at a vertex routed through different pools.

    Raises :class:`EmbeddingFailed` on failure; its ``state`` holds the
    transcript for post-mortem. Pass a fresh ``state`` to keep the transcript
    of a successful run as well.
    """
    if state is None:
        state = EmbeddingState()
    B = list(B)
    _check_input(G, A, B, H, q, state)
    if max_steps is None:
        max_steps = 4 * H.n
    run = _Run(G, A, B, q, nu, state, policy, seed, include_self)
    log = state.transcript
    hadj = H.adj
    queue = deque(sorted(range(H.n), key=lambda v: (-H.degree(v), v)))
    sizes = (0, [0] * len(B))

    while len(state.Y) < H.n:
        if state.step_count >= max_steps:
            raise EmbeddingFailed("step-budget", state, f"{max_steps} steps used")
        state.step_count += 1
        v = queue.popleft()
        neigh = sorted(w for w in hadj[v] if w in state.Y)
        if not neigh:
            a = run.fresh_vertex()
            if a is None:
                queue.appendleft(v)
                raise EmbeddingFailed("no-connector", state, "A is fully occupied")
            log.append({"event": "embed", "step": state.step_count, "v": v, "image": a})
        else:
            found = None
            for assignment in run.assignments(neigh):
                found = run.connector(assignment)
                if found is not None:
                    break
            if found is None:
                queue.appendleft(v)
                raise EmbeddingFailed("no-connector", state,
                                      f"no common endpoint for H-vertex {v}")
            a, paths = found
            log.append({"event": "embed", "step": state.step_count, "v": v, "image": a})
            for w, path in paths.items():
                t = assignment[w]
                state.S_t[t].update(path[1:-1])
                key = (min(v, w), max(v, w))
                state.path_image[key] = tuple(path if key[0] == w else path[::-1])
                log.append({"event": "connect", "step": state.step_count, "v": v, "w": w,
                            "pool": t, "path": list(path)})
        state.image[v] = a
        state.S.add(a)
        state.Y.add(v)

        # step 4: drop embedded vertices whose image stopped expanding in some pool
        ys = sorted(state.Y)
        imgs = [state.image[y] for y in ys]
        dropped = {}
        for t in range(run.D):
            fr = run.fractions(t, imgs)
            for y, img in zip(ys, imgs):
                if y not in dropped and fr[img] < 1 - 2 * nu - _TOL:
                    dropped[y] = (t, fr[img])
        for y in sorted(dropped, reverse=True):
            t, f = dropped[y]
            img = state.image.pop(y)
            state.Y.discard(y)
            for key in [k for k in state.path_image if y in k]:
                del state.path_image[key]
            state.discard_log.append((y, f"image {img} not expanding in pool {t} ({f:.3f})"))
            log.append({"event": "discard", "step": state.step_count, "v": y, "image": img,
                        "pool": t, "fraction": f})
            queue.appendleft(y)

        new_sizes = (len(state.S), [len(s) for s in state.S_t])
        if new_sizes[0] < sizes[0] or any(x < y for x, y in zip(new_sizes[1], sizes[1])):
            raise AssertionError("occupied sets shrank")
        if new_sizes[0] > state.step_count or any(x > q * new_sizes[0] for x in new_sizes[1]):
            raise AssertionError("occupancy exceeds the step accounting")
        sizes = new_sizes
        event = {"event": "step", "step": state.step_count, "S": new_sizes[0],
                 "S_t": new_sizes[1], "Y": len(state.Y)}
        if snapshots:
            event["state"] = state.snapshot()
        log.append(event)

    stats = {
        "steps": state.step_count,
        "discards": len(state.discard_log),
        "occupied_A": len(state.S),
        "occupied_pools": [len(s) for s in state.S_t],
    }
    return Embedding(dict(state.image), dict(state.path_image), stats)


def transcript_jsonl(events: list[dict]) -> str:
    return "".join(json.dumps(e, sort_keys=True) + "\n" for e in events)


def verify_embedding(G: Graph, H: Graph, q: int, emb: Embedding) -> tuple[bool, list[str]]:
    """Check an embedding from scratch; returns ``(ok, defects)``."""
    defects = []
    img = emb.image
    if set(img) != set(range(H.n)):
        defects.append("branch map does not cover V(H)")
    if len(set(img.values())) != len(img):
        defects.append("vertex reuse: two branch vertices share an image")
    hedges = set(H.edges())
    keys = set(emb.paths)
    for e in sorted(hedges - keys):
        defects.append(f"missing path for edge {e[0]}-{e[1]}")
    for e in sorted(keys - hedges):
        defects.append(f"extra path for non-edge {e[0]}-{e[1]}")
    used: dict[int, str] = {v: f"branch {k}" for k, v in img.items()}
    for (u, v), path in sorted(emb.paths.items()):
        tag = f"edge {u}-{v}"
        if len(path) != q + 1:
            defects.append(f"wrong path length for {tag}: {len(path) - 1}")
        if path and (path[0], path[-1]) not in ((img.get(u), img.get(v)), (img.get(v), img.get(u))):
            defects.append(f"path endpoints of {tag} are not the branch images")
        for x, y in zip(path[:-1], path[1:]):
            if not (0 <= x < G.n and 0 <= y < G.n) or not G.has_edge(x, y):
                defects.append(f"missing host edge {x}-{y} on {tag}")
        for x in path[1:-1]:
            if x in used:
                defects.append(f"vertex reuse: {x} on {tag} already used by {used[x]}")
            else:
                used[x] = tag
    # contracting the paths must give back H
    contracted = set()
    inv = {v: k for k, v in img.items()}
    for path in emb.paths.values():
        if path and path[0] in inv and path[-1] in inv:
            a, b = inv[path[0]], inv[path[-1]]
            contracted.add((min(a, b), max(a, b)))
    if not defects and contracted != hedges:
        defects.append("contracted graph differs from H")
    return not defects, defects
