"""Worked examples with hand-derived or calibrated answers, plus the monotonicity
invariants that tie the checkers together."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subramsey.coloring import color_edges
from subramsey.embedder import EmbeddingFailed, EmbeddingState, embed_subdivision, find_connector, verify_embedding
from subramsey.expansion import (Chain, bad_vertices, check_chain_expanding, check_good_pair,
                                 count_nonspanning_singletons, reachable_fraction, robustness_probe,
                                 spanning_fraction)
from subramsey.graph import Graph, complete_graph, count_edges_between, gen_gnp, subdivide
from subramsey.harness import first_moment, load_calibration
from subramsey.regularity import density, find_star_config, is_lower_regular_exact

CAL = load_calibration()


def _matching(n: int) -> Graph:
    return Graph.from_edges(2 * n, [(i, n + i) for i in range(n)])


def _layered(n: int, ell: int, block) -> Graph:
    edges = []
    for i in range(ell):
        j = (i + 1) % ell
        for a, b in block(n):
            u, v = i * n + a, j * n + b
            edges.append((min(u, v), max(u, v)))
    return Graph.from_edges(n * ell, edges)


def _chain(n: int, ell: int, block) -> Chain:
    return Chain(_layered(n, ell, block), [range(i * n, (i + 1) * n) for i in range(ell)])


def _match_block(n):
    return [(i, i) for i in range(n)]


def _full_block(n):
    return [(i, j) for i in range(n) for j in range(n)]


class TestGraphExamples:
    def test_gnp_edge_count_window(self):
        assert 3500 <= gen_gnp(1000, 0.01, 7).m <= 6500

    def test_k4_subdivision_size(self):
        Hq, _ = subdivide(complete_graph(4), 2)
        assert (Hq.n, Hq.m) == (10, 12)

    def test_matching_edge_count(self):
        assert count_edges_between(_matching(4), [0, 1], [4, 5]) == 2

    def test_c4_density(self):
        G = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
        assert density(G, [0, 2], [1, 3]) == 1.0


def test_matching_regularity_witness():
    res = is_lower_regular_exact(_matching(4), range(4), range(4, 8), 0.25, 0.5)
    assert not res.holds
    assert len(res.witness_u) == 1 and len(res.witness_w) == 1
    u, w = next(iter(res.witness_u)), next(iter(res.witness_w))
    assert w != u + 4
    # the witness reproduces the violation
    assert density(_matching(4), res.witness_u, res.witness_w) < 0.375


def test_single_path_fraction():
    # v=0, w=1, b1=2, b2=3
    G = Graph.from_edges(4, [(0, 2), (2, 3), (1, 3)])
    assert reachable_fraction(G, 0, [0, 1], [2, 3], 3) == 0.5


class TestChainExamples:
    def test_matching_singleton_spans_one_sixth(self):
        ch = _chain(6, 3, _match_block)
        assert spanning_fraction(ch, [0]) == pytest.approx(1 / 6)

    def test_matching_census(self):
        assert count_nonspanning_singletons(_chain(6, 3, _match_block), 0.5) == 6

    def test_matching_violated(self):
        rep = check_chain_expanding(_chain(6, 3, _match_block), 0.25, 0.25, 0.25, 1.0, 20, 0)
        assert rep.verdict == "violated"

    def test_complete_consistent(self):
        rep = check_chain_expanding(_chain(6, 3, _full_block), 0.25, 0.25, 0.25, 1.0, 20, 0)
        assert rep.verdict == "consistent" and not rep.excluded

    @pytest.mark.parametrize("c", [3.0, 10.0])
    def test_calibrated_random_chain(self, c):
        rec = CAL["chain"]["by_c"][str(c)]
        n = CAL["chain"]["n"]
        verdicts = []
        for s in range(len(rec["verdicts"])):
            G = gen_gnp(n, c / math.sqrt(n), s)
            ch = Chain(G, [range(150), range(150, 300)])
            verdicts.append(check_chain_expanding(ch, 1 / 16, 1 / 16, 1 / 16, 1.0, 200, s).verdict)
        assert verdicts == rec["verdicts"]

    def test_calibrated_chain_consistent_rate(self):
        # the denser host used as the calibrated instance
        assert CAL["chain"]["by_c"]["10.0"]["consistent_rate"] >= 0.9

    @pytest.mark.xfail(strict=True, reason="at c=3 a 150-vertex singleton reaches about a third of "
                                           "V1 through two sparse layers, so every seed is violated")
    def test_sparse_chain_consistent_rate(self):
        assert CAL["chain"]["by_c"]["3.0"]["consistent_rate"] >= 0.9


class TestGoodPairExamples:
    def test_complete_graph_breaks_degree_condition(self):
        G = complete_graph(30)
        rep = check_good_pair(G, range(20), range(20, 30), 2, 0.25, 2.0, 5, 0)
        assert rep.cond3["max_degree"] == 29
        assert rep.cond3["bound"] == pytest.approx(2 * 20 * 2 * 20 ** -0.5)
        assert not rep.cond3["holds"]

    def test_star_bad_vertices(self):
        # center z=0 in A adjacent to all of B' = {4..9}; threshold 2*3*p/c^3.5 < 6
        edges = [(0, b) for b in range(4, 10)]
        G = Graph.from_edges(12, edges)
        with pytest.warns(UserWarning):
            out = bad_vertices(G, [0, 1, 2], range(3, 12), range(4, 10), q=3, c=2.0, p=0.5, n=3)
        thr = 2 * 3 * 0.5 / 2 ** 4.5
        assert thr < 1 and out == frozenset({0} | set(range(4, 10)))

    def test_star_second_level_empty_when_threshold_at_least_one(self):
        edges = [(0, b) for b in range(4, 10)]
        G = Graph.from_edges(12, edges)
        with pytest.warns(UserWarning):
            out = bad_vertices(G, [0, 1, 2], range(3, 12), range(4, 10), q=3, c=1.05, p=0.9, n=3)
        assert 1 <= 2 * 3 * 0.9 / 1.05 ** 4.5 < 6
        assert out == frozenset({0})

    def test_complete_graph_saturates(self):
        G = complete_graph(12)
        with pytest.warns(UserWarning):
            out = bad_vertices(G, range(4), range(4, 12), range(4, 10), q=3, c=2.0, p=0.5, n=4)
        assert out == frozenset(range(12))

    def test_calibrated_robustness(self):
        rec = CAL["robustness"]
        n, c, q = rec["n"], rec["c"], rec["q"]
        G = gen_gnp(2 * n, c / math.sqrt(n), 0)
        res = robustness_probe(G, range(n), range(n, 2 * n), q, rec["nu"], c,
                               rec["deletion_size"], 20, 0)
        assert res["p95"] == rec["p95"][0] <= rec["budget"]


class TestEmbedderExamples:
    def test_tripartite_single_edge(self):
        A, B1, B2 = range(4), range(4, 7), range(7, 10)
        edges = [(a, b) for a in A for b in list(B1) + list(B2)]
        G = Graph.from_edges(10, edges)
        H = Graph.from_edges(2, [(0, 1)])
        emb = embed_subdivision(G, A, [B1, B2], H, 2, 0.25)
        assert verify_embedding(G, H, 2, emb)[0]
        (path,) = emb.paths.values()
        assert len(path) == 3 and path[1] in B1 and {path[0], path[2]} <= set(A)

    def test_empty_pool_has_no_connector(self):
        G = complete_graph(6)
        H = Graph.from_edges(2, [(0, 1)])
        with pytest.raises(EmbeddingFailed) as err:
            embed_subdivision(G, range(4), [[]], H, 2, 0.25)
        assert err.value.reason == "no-connector"

    def test_connector_blocked_by_occupied_vertices(self):
        # A={0..3}, B1={4,5,6}, B2={7,8,9}; 0 reaches {2,3} via B1, 1 reaches {2} via B2
        G = Graph.from_edges(10, [(0, 4), (2, 4), (0, 5), (3, 5), (1, 7), (2, 7)])
        state = EmbeddingState(S={0, 1, 2}, image={0: 0, 1: 1, 2: 2})
        assert find_connector(G, state, {0: 0, 1: 1}, range(4), [range(4, 7), range(7, 10)], 2, 0.25) is None
        state = EmbeddingState(S={0, 1}, image={0: 0, 1: 1})
        a, paths = find_connector(G, state, {0: 0, 1: 1}, range(4), [range(4, 7), range(7, 10)], 2, 0.25)
        assert a == 2 and {w: tuple(p) for w, p in paths.items()} == {0: (0, 4, 2), 1: (1, 7, 2)}


def test_first_moment_example():
    fm = first_moment(100, 0.01, 3, 2, 4)
    assert fm.bound == pytest.approx(1e-4)
    assert first_moment(50, 1.0, 3, 2, 4).bound >= 1


def test_calibrated_star_config():
    rec = CAL["star"]
    n, p, eps = rec["n"], rec["p"], rec["eps"]
    hits = 0
    for s in range(10):
        G = gen_gnp(n, p, s)
        col = color_edges(G, 2, "uniform", s)
        hits += find_star_config(G, col, 2, 2, 2, rec["mu"], eps, rec["c_prime"], s,
                                 rec["budget"], p=p) is not None
    assert hits >= 8


# invariants ------------------------------------------------------------------


def _instance(data, n_max=16):
    n = data.draw(st.integers(4, n_max))
    G = gen_gnp(n, data.draw(st.floats(0.1, 0.8)), data.draw(st.integers(0, 10 ** 6)))
    labels = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    A = [i for i in range(n) if labels[i] == 0] or [0]
    B = [i for i in range(n) if i not in A]
    return G, A, B


@settings(max_examples=80)
@given(st.data())
def test_deletion_monotone(data):
    G, A, B = _instance(data)
    q = data.draw(st.integers(2, 4))
    small = data.draw(st.sets(st.sampled_from(B))) if B else set()
    extra = data.draw(st.sets(st.sampled_from(B))) if B else set()
    for v in A:
        assert (reachable_fraction(G, v, A, B, q, forbidden=small | extra)
                <= reachable_fraction(G, v, A, B, q, forbidden=small))


@settings(max_examples=60)
@given(st.data())
def test_spanning_monotone_in_q(data):
    n = data.draw(st.integers(2, 8))
    ell = data.draw(st.integers(2, 4))
    G = gen_gnp(n * ell, data.draw(st.floats(0.1, 0.7)), data.draw(st.integers(0, 10 ** 6)))
    ch = Chain(G, [range(i * n, (i + 1) * n) for i in range(ell)])
    Q = sorted(data.draw(st.sets(st.integers(0, n - 1))))
    R = sorted(set(Q) | data.draw(st.sets(st.integers(0, n - 1))))
    assert spanning_fraction(ch, Q) <= spanning_fraction(ch, R)


@settings(max_examples=60)
@given(st.data())
def test_bad_vertices_monotone(data):
    G, A, B = _instance(data, 20)
    if not B:
        return
    small = data.draw(st.sets(st.sampled_from(B)))
    big = small | data.draw(st.sets(st.sampled_from(B)))
    q = data.draw(st.integers(2, 4))
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert bad_vertices(G, A, B, set(), q, 1.5, 0.3) == frozenset()
        assert bad_vertices(G, A, B, small, q, 1.5, 0.3) <= bad_vertices(G, A, B, big, q, 1.5, 0.3)
