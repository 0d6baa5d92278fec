import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from subramsey.graph import Graph

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def graphs(draw, min_n=1, max_n=12, max_p=1.0):
    """Small simple graphs as (n, edge list)."""
    n = draw(st.integers(min_n, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph.from_edges(n, [e for e, k in zip(pairs, keep) if k])


def dense_adj(G: Graph) -> np.ndarray:
    A = np.zeros((G.n, G.n), dtype=np.int64)
    for u, v in G.edges():
        A[u, v] = A[v, u] = 1
    return A


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def embed_instance(n: int, p: float, D: int, h_vertices: int, seed: int):
    """Host G(n, p) cut into A and D pools of equal size, plus an H of max degree D."""
    from subramsey.graph import cycle_graph, gen_gnp, random_regular

    G = gen_gnp(n, p, seed)
    perm = np.random.default_rng(seed).permutation(n)
    k = n // (D + 1)
    A = perm[:k].tolist()
    pools = [perm[k * (i + 1):k * (i + 2)].tolist() for i in range(D)]
    if D == 2:
        H = cycle_graph(h_vertices)
    else:
        H = random_regular(h_vertices + (h_vertices * D) % 2, D, seed)
    return G, A, pools, H


def transcript_violations(G, A, pools, q: int, nu: float, events) -> list[str]:
    """Recheck the per-step invariants of a transcript recorded with snapshots."""
    from subramsey.expansion import reachable_fraction

    out = []
    prev_s, prev_st = set(), [set() for _ in pools]
    for ev in events:
        if ev["event"] != "step":
            continue
        snap = ev["state"]
        S = set(snap["S"])
        St = [set(x) for x in snap["S_t"]]
        if not prev_s <= S or any(not a <= b for a, b in zip(prev_st, St)):
            out.append(f"step {ev['step']}: occupancy shrank")
        if any(len(x) > q * len(S) for x in St):
            out.append(f"step {ev['step']}: |S_t| > q|S|")
        for y_str, img in snap["image"].items():
            for t, Bt in enumerate(pools):
                f = reachable_fraction(G, img, A, Bt, q, forbidden=St[t] or None)
                if f < 1 - 2 * nu - 1e-12:
                    out.append(f"step {ev['step']}: image {img} of {y_str} not expanding in pool {t}")
        prev_s, prev_st = S, St
    return out


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: dict[int, str] = {}


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
