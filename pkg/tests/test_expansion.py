import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import graphs
from subramsey.expansion import (Chain, PoolReach, bad_vertices, check_chain_expanding,
                                 check_good_pair, count_nonspanning_singletons,
                                 expansion_census, good_pair_thresholds, is_expanding_vertex,
                                 reach_set, reachable_fraction, robustness_probe,
                                 spanning_fraction)
from subramsey.graph import Graph, complete_graph, gen_gnp, kth_neighborhood


def to_nx(G: Graph) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(range(G.n))
    g.add_edges_from(G.edges())
    return g


def oracle_reach(G, v, A, B, q, forbidden=(), include_self=False) -> set:
    """Endpoints in A of simple length-q paths from v with interior in B, by enumeration."""
    forbidden = set(forbidden)
    free_b = set(B) - forbidden
    out = set()
    for w in A:
        if w in forbidden:
            continue
        if w == v:
            if include_self:
                out.add(w)
            continue
        sub = to_nx(G).subgraph(free_b | {v, w})
        for path in nx.all_simple_paths(sub, v, w, cutoff=q):
            if len(path) == q + 1 and all(x in free_b for x in path[1:-1]):
                out.add(w)
                break
    return out


@st.composite
def split_instance(draw, max_n=14):
    G = draw(graphs(min_n=3, max_n=max_n))
    labels = draw(st.lists(st.sampled_from("ABx"), min_size=G.n, max_size=G.n))
    A = [i for i, c in enumerate(labels) if c == "A"]
    B = [i for i, c in enumerate(labels) if c == "B"]
    if not A:
        A = [0]
        B = [b for b in B if b != 0]
    return G, A, B


class TestReach:
    @given(split_instance(), st.integers(1, 4), st.data())
    def test_matches_path_enumeration(self, inst, q, data):
        G, A, B = inst
        v = data.draw(st.sampled_from(A))
        forb = data.draw(st.sets(st.sampled_from(A + B))) if data.draw(st.booleans()) else set()
        incl = data.draw(st.booleans())
        expect = oracle_reach(G, v, A, B, q, forb, incl)
        assert reach_set(G, v, A, B, q, forb or None, incl) == expect
        assert reachable_fraction(G, v, A, B, q, forb or None, incl) == pytest.approx(len(expect) / len(A))

    @given(split_instance(), st.integers(2, 5))
    def test_returned_paths_are_valid(self, inst, q):
        G, A, B = inst
        pr = PoolReach(G, A, B, q)
        free = np.ones(len(pr.b), dtype=bool)
        R = pr.matrix(np.arange(len(pr.a)), include_self=False)
        Bset = set(B)
        for i, j in zip(*np.nonzero(R)):
            path = pr.path(int(i), int(j), free)
            assert path is not None and len(path) == q + 1 and len(set(path)) == q + 1
            assert path[0] == pr.a[i] and path[-1] == pr.a[j]
            assert set(path[1:-1]) <= Bset
            assert all(G.has_edge(x, y) for x, y in zip(path[:-1], path[1:]))

    def test_walk_bound_for_q2(self):
        # with q=2 reach is a subset of the restricted second neighborhood
        G = gen_gnp(40, 0.2, 1)
        A, B = list(range(20)), list(range(20, 40))
        for v in A[:5]:
            walk = kth_neighborhood(G, v, 2, restrict=B) & set(A)
            assert reach_set(G, v, A, B, 2) == walk - {v}

    def test_complete_host_expands(self):
        G = complete_graph(12)
        A, B = range(6), range(6, 12)
        assert is_expanding_vertex(G, 0, A, B, 3, 0.2)
        census = expansion_census(G, A, B, 2)
        assert set(census.values()) == {5 / 6}

    def test_validation(self):
        G = complete_graph(6)
        with pytest.raises(ValueError):
            reachable_fraction(G, 5, [0, 1], [2, 3], 2)
        with pytest.raises(ValueError):
            reachable_fraction(G, 0, [0, 1], [1, 2], 2)
        with pytest.raises(ValueError):
            reachable_fraction(G, 0, [0, 1], [2, 3], 2, forbidden=[5])


def composed_oracle(G, layers, Q) -> set:
    cur = set(Q)
    ell = len(layers)
    for i in range(ell):
        nxt = set(layers[(i + 1) % ell])
        cur = {y for x in cur for y in G.neighbors(x).tolist() if y in nxt}
    return cur


class TestChain:
    @given(st.integers(2, 4), st.integers(2, 5), st.floats(0.1, 0.9), st.integers(0, 10**6), st.data())
    def test_spanning_matches_set_composition(self, ell, size, p, seed, data):
        G = gen_gnp(ell * size, p, seed)
        layers = [list(range(i * size, (i + 1) * size)) for i in range(ell)]
        chain = Chain(G, layers)
        Q = data.draw(st.sets(st.sampled_from(layers[0])))
        assert spanning_fraction(chain, Q) == pytest.approx(len(composed_oracle(G, layers, Q)) / size)
        R = chain.reach_matrix()
        for i, v in enumerate(layers[0]):
            assert set(np.array(layers[0])[R[i]].tolist()) == composed_oracle(G, layers, [v])

    def test_chain_validation(self):
        G = complete_graph(6)
        with pytest.raises(ValueError):
            Chain(G, [[0, 1, 2]])
        with pytest.raises(ValueError):
            Chain(G, [[0, 1], [2]])
        with pytest.raises(ValueError):
            Chain(G, [[0, 1], [1, 2]])
        with pytest.raises(ValueError):
            spanning_fraction(Chain(G, [[0, 1], [2, 3]]), [2])

    def test_complete_chain_is_consistent(self):
        G = complete_graph(30)
        chain = Chain(G, [range(10), range(10, 20), range(20, 30)])
        assert count_nonspanning_singletons(chain, 0.1) == 0
        rep = check_chain_expanding(chain, 0.1, 0.1, 0.1, 1.0, 20, 0)
        assert rep.consistent

    def test_empty_chain_is_violated(self):
        G = Graph.from_edges(20, [])
        rep = check_chain_expanding(Chain(G, [range(10), range(10, 20)]), 0.1, 0.1, 0.1, 1.0, 5, 0)
        assert rep.verdict == "violated" and len(rep.excluded) == 10

    def test_parameter_range(self):
        chain = Chain(complete_graph(4), [[0, 1], [2, 3]])
        with pytest.raises(ValueError):
            check_chain_expanding(chain, 0.5, 0.1, 0.1, 1.0, 5, 0)


class TestGoodPair:
    def test_thresholds(self):
        th = good_pair_thresholds(100, 2, 2.0)
        assert th["p"] == pytest.approx(0.2)
        assert th["max_degree_bound"] == pytest.approx(40)
        assert th["bprime_size_bound"] == pytest.approx(100 / 16)
        assert th["heavy_count_bound"] == pytest.approx(100 ** 0.75 / 2)

    def test_conditions_on_random_pair(self):
        n = 200
        G = gen_gnp(2 * n, 6 / np.sqrt(n), 3)
        A, B = range(n), range(n, 2 * n)
        rep = check_good_pair(G, A, B, 2, 0.25, 3.0, 20, 0)
        assert rep.cond1["holds"]
        # condition 3 by direct degree computation
        sub = G.block(np.arange(2 * n), np.arange(2 * n))
        assert rep.cond3["max_degree"] == int(sub.sum(axis=1).max())
        assert rep.cond3["holds"] == (rep.cond3["max_degree"] < 2 * n * 3.0 / np.sqrt(n))
        # condition 2 agrees with the census
        census = expansion_census(G, A, B, 2)
        assert rep.cond2["holds"] == all(f >= 0.75 - 1e-12 for f in census.values())

    def test_size_mismatch_fails_cond1(self):
        G = complete_graph(10)
        rep = check_good_pair(G, range(5), range(5, 10), 2, 0.25, 2.0, 5, 0, n=6)
        assert not rep.cond1["holds"] and not rep.ok

    def test_errors(self):
        G = complete_graph(10)
        with pytest.raises(ValueError):
            check_good_pair(G, range(5), range(4, 10), 2, 0.25, 2.0, 5, 0)
        with pytest.raises(ValueError):
            check_good_pair(G, range(5), range(5, 10), 2, 0.25, 1.0, 5, 0)


class TestBadVertices:
    def test_single_level_by_hand(self):
        # star centred at 0 with leaves in B'; threshold tiny so the centre is bad
        G = Graph.from_edges(6, [(0, 3), (0, 4), (1, 3)])
        with pytest.warns(UserWarning, match="larger"):
            out = bad_vertices(G, [0, 1, 2], [3, 4, 5], [3, 4], q=2, c=2.0, p=0.1, n=3)
        thr = 2 * 3 * 0.1 / 2 ** 3.5
        assert thr < 1
        assert out == {0, 1}

    def test_warns_on_outside_set(self):
        G = complete_graph(6)
        with pytest.warns(UserWarning):
            bad_vertices(G, [0, 1, 2], [3, 4], [5], 2, 2.0, 0.5)

    def test_robustness_probe_zero_deletion(self):
        G = complete_graph(20)
        out = robustness_probe(G, range(10), range(10, 20), 2, 0.2, 2.0, 0, 3, 0)
        assert out["counts"] == [0, 0, 0] and out["within_budget"] == 1.0
        with pytest.raises(ValueError):
            robustness_probe(G, range(10), range(10, 20), 2, 0.2, 2.0, 11, 3, 0)
