"""End-to-end Ramsey trials, sweeps, the first-moment calculator and the
degree-concentration check."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from importlib import resources

import numpy as np

from .coloring import EdgeColoring, color_edges
from .embedder import Embedding, EmbeddingFailed, embed_subdivision, verify_embedding
from .expansion import check_good_pair, expansion_census
from .graph import Graph, cycle_graph, gen_gnp, random_regular
from .io import read_edge_list
from .regularity import InfeasibleConfig, StarConfig, find_star_config
from .search import find_subdivision

def load_calibration() -> dict:
    """Calibrated grids and rates shipped with the package."""
    return json.loads(resources.files("subramsey").joinpath("calibration.json").read_text())


SWEEP_COLUMNS = ("n", "q", "D", "r", "c", "strategy", "seed", "stage_reached", "verdict", "wall_ms")
STAGES = ("star-config", "assemble", "good-pair", "embed", "found")


@dataclass
class ExperimentConfig:
    """One Ramsey trial. The host edge probability is ``c * n**(-1 + 1/q)``."""

    n: int = 3000
    q: int = 2
    D: int = 2
    r: int = 2
    c: float = 10.0
    mu: float = 0.25
    nu: float | None = None          # embedder nu; defaults to 1/(4D)
    eps: float = 0.3
    c_prime: float = 0.1
    h_family: str = "cycle"          # cycle | random-regular | file
    h_size: float = 0.005            # |V(H)| = round(h_size * n)
    h_file: str | None = None
    h_cap: float = 0.5               # |V(H)| may use at most this fraction of mu*n
    strategy: str = "uniform"
    seed: int = 0
    star_budget: int = 200
    step_factor: int = 4
    good_samples: int = 20
    require_good: bool = False
    policy: str = "greedy"
    fallback: bool = False
    fallback_budget: int = 10**6

    @property
    def p(self) -> float:
        return self.c * self.n ** (-1 + 1 / self.q)

    @property
    def embed_nu(self) -> float:
        return self.nu if self.nu is not None else 1 / (4 * self.D)

    @property
    def K(self) -> int:
        return (self.q - 1) * self.D + 1

    def h_vertices(self) -> int:
        return int(round(self.h_size * self.n))

    def validate(self, layers: bool = True) -> None:
        """``layers=False`` skips the checks that only concern the star pipeline."""
        if self.n < 1 or self.q < 2 or self.D < 1 or self.r < 1:
            raise ValueError("need n >= 1, q >= 2, D >= 1, r >= 1")
        if not 0 < self.p <= 1:
            raise ValueError(f"p = {self.p:g} is not a probability")
        if not layers:
            return
        if self.mu * self.K > 1 + 1e-12:
            raise ValueError(f"mu * K = {self.mu * self.K:g} exceeds 1")
        if self.h_family != "file" and self.h_vertices() > self.h_cap * self.mu * self.n:
            raise ValueError("H is too large for the configured layer size")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        """Build from string or typed values; unknown keys raise ``KeyError``."""
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, val in values.items():
            key = key.replace("-", "_")
            if key not in known:
                raise KeyError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(known[key].type, val)
        return cls(**kwargs)


def _coerce(typ, val):
    if not isinstance(val, str):
        return val
    typ = str(typ)
    if val.lower() in ("none", "null", ""):
        return None
    if typ.startswith("int"):
        return int(float(val))
    if typ.startswith("float"):
        return float(val)
    if typ.startswith("bool"):
        return val.lower() in ("1", "true", "yes", "on")
    return val


def build_h(cfg: ExperimentConfig, seed: int) -> Graph:
    if cfg.h_family == "file":
        if not cfg.h_file:
            raise ValueError("h_family=file needs h_file")
        return read_edge_list(cfg.h_file)
    k = cfg.h_vertices()
    if cfg.h_family == "cycle":
        return cycle_graph(k)
    if cfg.h_family == "random-regular":
        return random_regular(k, cfg.D, seed)
    raise ValueError(f"unknown H family {cfg.h_family!r}")


@dataclass
class TrialResult:
    config: dict
    seeds: dict
    colors: list = field(default_factory=list)
    fallback: dict | None = None
    verdict: str = "not-found"
    stage_reached: str = "none"
    wall_ms: float = 0.0
    embedding: Embedding | None = None
    star_config: StarConfig | None = None
    budget_exhausted: bool = False

    @property
    def found(self) -> bool:
        return self.verdict == "monochromatic-copy-found"

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "seeds": self.seeds,
            "colors": self.colors,
            "fallback": self.fallback,
            "verdict": self.verdict,
            "stage_reached": self.stage_reached,
            "wall_ms": self.wall_ms,
            "budget_exhausted": self.budget_exhausted,
            "embedding": None if self.embedding is None else {
                "branch": {str(k): v for k, v in self.embedding.image.items()},
                "paths": {f"{u}-{v}": list(p) for (u, v), p in self.embedding.paths.items()},
            },
        }


def trial_seeds(seed: int) -> dict:
    graph, color, h, star, embed, fb = np.random.SeedSequence(seed).generate_state(6).tolist()
    return {"graph": graph, "coloring": color, "h": h, "star": star, "embed": embed, "fallback": fb}


def assemble_a(G: Graph, v1, pools, q: int, nu_chain: float) -> tuple[frozenset, dict]:
    """Drop from ``V1`` every vertex that is not expanding into some pool."""
    removed = {}
    for t, pool in enumerate(pools):
        fr = expansion_census(G, v1, pool, q)
        for v, f in fr.items():
            if f < 1 - nu_chain - 1e-12 and v not in removed:
                removed[v] = t
    return frozenset(v for v in v1 if v not in removed), removed


def run_trial(cfg: ExperimentConfig, *, G: Graph | None = None,
              coloring: EdgeColoring | None = None) -> TrialResult:
    """Sample, color, and look for a monochromatic ``H^q`` through the
    star-configuration pipeline, then optionally by direct search."""
    start = time.perf_counter()
    cfg.validate()
    seeds = trial_seeds(cfg.seed)
    res = TrialResult(config=cfg.to_dict(), seeds=seeds)
    if G is None:
        G = gen_gnp(cfg.n, cfg.p, seeds["graph"])
    if coloring is None:
        coloring = color_edges(G, cfg.r, cfg.strategy, seeds["coloring"])
    H = build_h(cfg, seeds["h"])
    nu = cfg.embed_nu
    best = -1

    for color in coloring.by_size():
        rec = {"color": color, "edges": int(coloring.class_sizes()[color]), "stage": "star-config"}
        res.colors.append(rec)
        try:
            sc = find_star_config(G, coloring, cfg.r, cfg.D, cfg.q, cfg.mu, cfg.eps, cfg.c_prime,
                                  seeds["star"] + color, cfg.star_budget, p=cfg.p, color=color)
        except InfeasibleConfig as exc:
            rec["error"] = str(exc)
            sc = None
        if sc is None:
            res.budget_exhausted = True
            continue
        rec.update(p_prime=float(sc.p_prime), star_report={k: v for k, v in sc.report.items()
                                                      if k != "verification"})
        rec["stage"] = "assemble"
        best = max(best, 1)
        sub = sc.subgraph
        pools = sc.pools
        A, removed = assemble_a(sub, sc.v1, pools, cfg.q, nu / 2)
        rec["A_size"] = len(A)
        if len(A) < max(H.n, 1):
            continue
        rec["stage"] = "good-pair"
        best = max(best, 2)
        try:
            goods = [check_good_pair(sub, A, pool, cfg.q, nu, cfg.c, cfg.good_samples,
                                     seeds["star"] + t) for t, pool in enumerate(pools)]
        except ValueError as exc:  # goodness is only defined for c > 1
            goods = []
            rec["good_error"] = str(exc)
        rec["good"] = [g.ok for g in goods]
        rec["good_conditions"] = [[g.cond1["holds"], g.cond2["holds"], g.cond3["holds"],
                                   g.cond4["holds"]] for g in goods]
        if cfg.require_good and not (goods and all(rec["good"])):
            continue
        rec["stage"] = "embed"
        best = max(best, 3)
        try:
            emb = embed_subdivision(sub, A, pools, H, cfg.q, nu,
                                    max_steps=cfg.step_factor * H.n,
                                    seed=seeds["embed"], policy=cfg.policy)
        except EmbeddingFailed as exc:
            rec["embed_failure"] = exc.reason
            if exc.reason == "step-budget":
                res.budget_exhausted = True
            continue
        host = coloring.class_graph(G, color)
        ok, defects = verify_embedding(host, H, cfg.q, emb)
        rec["verified"] = ok
        if not ok:
            rec["defects"] = defects
            continue
        rec["stage"] = "found"
        res.embedding, res.star_config = emb, sc
        res.verdict = "monochromatic-copy-found"
        res.budget_exhausted = False
        best = 4
        break

    res.stage_reached = STAGES[best] if best >= 0 else "none"
    if not res.found and cfg.fallback:
        color = coloring.by_size()[0]
        out = find_subdivision(coloring.class_graph(G, color), H, cfg.q,
                               budget=cfg.fallback_budget, seed=seeds["fallback"])
        res.fallback = {"color": color, "found": out.found, "expansions": out.expansions,
                        "complete": out.complete}
        if out.found:
            res.embedding = out.embedding
            res.verdict = "monochromatic-copy-found"
            res.stage_reached = "fallback"
            res.budget_exhausted = False
        elif not out.complete:
            res.budget_exhausted = True
    res.wall_ms = (time.perf_counter() - start) * 1000
    return res


# ---------------------------------------------------------------------------
# sweeps


def expand_grid(grid) -> list[dict]:
    """A dict of lists becomes its Cartesian product; a list of dicts is taken as is."""
    if isinstance(grid, dict):
        if not grid:
            return []
        keys = list(grid)
        vals = [v if isinstance(v, (list, tuple)) else [v] for v in grid.values()]
        return [dict(zip(keys, combo)) for combo in itertools.product(*vals)]
    return [dict(cell) for cell in grid]


def _run_cell(args) -> dict:
    base, cell = args
    cfg = None
    t0 = time.perf_counter()
    try:
        cfg = ExperimentConfig.from_mapping({**base, **cell})
        res = run_trial(cfg)
        stage, verdict, ms = res.stage_reached, res.verdict, res.wall_ms
    except Exception as exc:  # per-cell failures become rows
        stage, verdict, ms = f"error: {exc}", "error", (time.perf_counter() - t0) * 1000
    src = cfg.to_dict() if cfg is not None else {**base, **cell}
    row = {k: src.get(k) for k in SWEEP_COLUMNS[:7]}
    row.update(stage_reached=stage, verdict=verdict, wall_ms=round(ms, 1))
    return row


def sweep(grid, parallelism: int = 1, base: dict | None = None) -> list[dict]:
    cells = expand_grid(grid)
    jobs = [(base or {}, cell) for cell in cells]
    if parallelism > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            return list(pool.map(_run_cell, jobs))
    return [_run_cell(j) for j in jobs]


def sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row.get(k) for k in SWEEP_COLUMNS})
    return buf.getvalue()


def success_rates(rows: list[dict], key: str = "c") -> dict:
    out: dict = {}
    for row in rows:
        hit, tot = out.get(row[key], (0, 0))
        out[row[key]] = (hit + (row["verdict"] == "monochromatic-copy-found"), tot + 1)
    return {k: h / t for k, (h, t) in sorted(out.items())}


# ---------------------------------------------------------------------------
# first moment and concentration


@dataclass(frozen=True)
class FirstMoment:
    n0: float
    e0: float
    log_bound: float

    @property
    def bound(self) -> float:
        return math.exp(self.log_bound) if self.log_bound < 700 else math.inf


def first_moment(n_host: int, p: float, D: int, q: int, h_vertices: int) -> FirstMoment:
    """Vertex and edge counts of ``H^q`` for a ``D``-regular ``H`` and the log of
    ``n^{n0} p^{e0}``, which bounds the expected number of labeled copies."""
    if (h_vertices * D) % 2:
        raise ValueError("h_vertices * D must be even for a D-regular H")
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    if n_host < 1:
        raise ValueError("n must be positive")
    n0 = h_vertices * D * (q - 1) // 2 + h_vertices
    e0 = h_vertices * D * q // 2
    return FirstMoment(n0, e0, n0 * math.log(n_host) + e0 * math.log(p))


def chernoff_check(n: int, c: float, q: int, alpha: float, trials: int, seed: int) -> dict:
    """Count vertices with more than ``4 alpha n p`` neighbors in a random
    ``alpha n``-set, over independent samples of ``G(n, c n^{-1+1/q})``."""
    if c <= 0:
        raise ValueError("c must be positive")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    p = c * n ** (-1 + 1 / q)
    if p > 1:
        raise ValueError(f"p = {p:g} exceeds 1")
    threshold = 4 * alpha * n * p
    size = int(round(alpha * n))
    ss = np.random.SeedSequence(seed)
    counts = []
    for child in ss.spawn(trials):
        gseed, sseed = child.generate_state(2).tolist()
        G = gen_gnp(n, p, gseed)
        S = np.zeros(n, dtype=bool)
        S[np.random.default_rng(sseed).choice(n, size, replace=False)] = True
        e = G.edge_array
        into = (np.bincount(e[:, 0], weights=S[e[:, 1]], minlength=n)
                + np.bincount(e[:, 1], weights=S[e[:, 0]], minlength=n))
        counts.append(int((into > threshold).sum()))
    scale = n ** (1 - 1 / q)
    arr = np.array(counts)
    return {
        "n": n, "p": p, "threshold": threshold, "set_size": size,
        "counts": counts,
        "max": int(arr.max()) if len(arr) else 0,
        "mean": float(arr.mean()) if len(arr) else 0.0,
        "scale": scale,
        "ratio": (int(arr.max()) if len(arr) else 0) / scale,
    }
