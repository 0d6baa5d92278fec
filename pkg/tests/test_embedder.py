import json

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import embed_instance, transcript_violations
from subramsey.embedder import (Embedding, EmbeddingFailed, EmbeddingState, embed_subdivision,
                                find_connector, transcript_jsonl, verify_embedding)
from subramsey.graph import Graph, complete_graph, cycle_graph, path_graph, subdivide


def embedded_nx(emb: Embedding) -> nx.Graph:
    g = nx.Graph()
    for path in emb.paths.values():
        nx.add_path(g, path)
    g.add_nodes_from(emb.image.values())
    return g


def subdivision_nx(H: Graph, q: int) -> nx.Graph:
    Hq, _ = subdivide(H, q)
    g = nx.Graph()
    g.add_nodes_from(range(Hq.n))
    g.add_edges_from(Hq.edges())
    return g


@pytest.mark.parametrize("q,D", [(2, 2), (2, 3), (3, 2), (3, 3)])
def test_embeds_and_verifies(q, D):
    p = 0.15 if q == 2 else 0.08
    for seed in range(4):
        G, A, pools, H = embed_instance(500, p, D, 10, seed)
        emb = embed_subdivision(G, A, pools, H, q, 1 / (4 * D), seed=seed)
        ok, defects = verify_embedding(G, H, q, emb)
        assert ok, defects
        assert nx.is_isomorphic(embedded_nx(emb), subdivision_nx(H, q))
        assert set(emb.image.values()) <= set(A)
        for (u, v), path in emb.paths.items():
            pool = next(t for t, Bt in enumerate(pools) if path[1] in set(Bt))
            assert set(path[1:-1]) <= set(pools[pool])


@pytest.mark.parametrize("policy", ["greedy", "first", "random"])
def test_policies(policy):
    G, A, pools, H = embed_instance(300, 0.25, 2, 8, 1)
    emb = embed_subdivision(G, A, pools, H, 2, 0.125, policy=policy, seed=3)
    assert verify_embedding(G, H, 2, emb)[0]


def test_seeded_runs_repeat():
    G, A, pools, H = embed_instance(300, 0.25, 2, 8, 2)
    a = embed_subdivision(G, A, pools, H, 2, 0.125, policy="random", seed=5)
    b = embed_subdivision(G, A, pools, H, 2, 0.125, policy="random", seed=5)
    assert a.to_json() == b.to_json()


def test_json_roundtrip():
    G, A, pools, H = embed_instance(300, 0.25, 2, 8, 3)
    emb = embed_subdivision(G, A, pools, H, 2, 0.125)
    back = Embedding.from_json(emb.to_json())
    assert back.image == emb.image and back.paths == emb.paths


class TestTampering:
    @pytest.fixture
    def case(self):
        G, A, pools, H = embed_instance(400, 0.2, 2, 8, 4)
        return G, H, embed_subdivision(G, A, pools, H, 2, 0.125)

    def test_broken_edge(self, case):
        G, H, emb = case
        key, path = sorted(emb.paths.items())[0]
        non = next(x for x in range(G.n) if not G.has_edge(path[0], x) and x not in path)
        emb.paths[key] = (path[0], non, *path[2:])
        ok, defects = verify_embedding(G, H, 2, emb)
        assert not ok and any("missing host edge" in d for d in defects)

    def test_reused_vertex(self, case):
        G, H, emb = case
        items = sorted(emb.paths.items())
        (k1, p1), (k2, p2) = items[0], items[1]
        emb.paths[k2] = (p2[0], p1[1], p2[-1])
        ok, defects = verify_embedding(G, H, 2, emb)
        assert not ok and any("reuse" in d or "host edge" in d for d in defects)

    def test_wrong_length(self, case):
        G, H, emb = case
        key, path = sorted(emb.paths.items())[0]
        emb.paths[key] = path[:1] + path[-1:]
        ok, defects = verify_embedding(G, H, 2, emb)
        assert not ok and any("length" in d for d in defects)

    def test_missing_path(self, case):
        G, H, emb = case
        del emb.paths[sorted(emb.paths)[0]]
        assert not verify_embedding(G, H, 2, emb)[0]


class TestTranscripts:
    @given(st.integers(0, 10**6), st.sampled_from([(2, 2), (3, 2), (2, 3)]), st.floats(0.05, 0.3))
    def test_invariants_pass_or_fail(self, seed, qd, p):
        q, D = qd
        G, A, pools, H = embed_instance(150, p, D, 6, seed)
        nu = 1 / (4 * D)
        state = EmbeddingState()
        try:
            embed_subdivision(G, A, pools, H, q, nu, seed=seed, snapshots=True, state=state)
        except EmbeddingFailed as exc:
            assert exc.reason in ("no-connector", "step-budget")
        assert transcript_violations(G, A, pools, q, nu, state.transcript) == []

    def test_jsonl_events(self):
        G, A, pools, H = embed_instance(300, 0.25, 2, 8, 6)
        state = EmbeddingState()
        embed_subdivision(G, A, pools, H, 2, 0.125, state=state)
        lines = transcript_jsonl(state.transcript).splitlines()
        kinds = {json.loads(x)["event"] for x in lines}
        assert {"embed", "connect", "step"} <= kinds
        assert sum(json.loads(x)["event"] == "embed" for x in lines) >= H.n


class TestFailures:
    def test_empty_pools_fail_cleanly(self):
        G = Graph.from_edges(30, [])
        with pytest.raises(EmbeddingFailed) as info:
            embed_subdivision(G, range(10), [range(10, 20), range(20, 30)], cycle_graph(4), 2, 0.125)
        assert info.value.reason == "no-connector"
        assert info.value.state.transcript

    def test_step_budget(self):
        G, A, pools, H = embed_instance(300, 0.25, 2, 8, 1)
        with pytest.raises(EmbeddingFailed) as info:
            embed_subdivision(G, A, pools, H, 2, 0.125, max_steps=3)
        assert info.value.reason == "step-budget"

    @pytest.mark.parametrize("kwargs", [
        dict(A=range(5), B=[range(4, 10), range(10, 15)], H=cycle_graph(4), q=2),
        dict(A=range(5), B=[range(5, 10), range(10, 15)], H=cycle_graph(4), q=1),
        dict(A=range(5), B=[range(5, 10)], H=cycle_graph(4), q=2),
        dict(A=[], B=[range(5, 10), range(10, 15)], H=path_graph(2), q=2),
    ])
    def test_bad_input(self, kwargs):
        with pytest.raises(EmbeddingFailed) as info:
            embed_subdivision(complete_graph(15), kwargs["A"], kwargs["B"], kwargs["H"], kwargs["q"], 0.1)
        assert info.value.reason == "bad-input"

    def test_find_connector_needs_injective_assignment(self):
        state = EmbeddingState(image={0: 0, 1: 1}, S={0, 1}, Y={0, 1})
        with pytest.raises(ValueError):
            find_connector(complete_graph(12), state, {0: 0, 1: 0}, range(4), [range(4, 8), range(8, 12)],
                           2, 0.1)

    def test_find_connector_returns_paths(self):
        state = EmbeddingState(image={0: 0, 1: 1}, S={0, 1}, Y={0, 1})
        a, paths = find_connector(complete_graph(12), state, {0: 0, 1: 1}, range(4),
                                  [range(4, 8), range(8, 12)], 2, 0.1)
        assert a in (2, 3)
        assert paths[0][0] == 0 and paths[1][0] == 1 and paths[0][-1] == paths[1][-1] == a
