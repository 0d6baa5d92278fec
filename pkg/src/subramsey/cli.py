"""Command-line front end. Every subcommand is a thin wrapper over a library call."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness
from .coloring import STRATEGIES
from .embedder import POLICIES, EmbeddingFailed, EmbeddingState, embed_subdivision, transcript_jsonl, verify_embedding
from .expansion import Chain, check_chain_expanding, check_good_pair, robustness_probe
from .graph import (Graph, complete_graph, cycle_graph, gen_gnp, path_graph, random_regular,
                    subdivide)
from .io import format_edge_list, read_edge_list
from .regularity import EXHAUSTIVE_LIMIT, is_lower_regular_exact, is_lower_regular_sampled
from .search import is_ramsey_exhaustive


class CliError(Exception):
    """Input problem: reported as ``error: ...`` with exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(2)


# ---------------------------------------------------------------------------
# argument helpers


def vertex_set(text: str) -> list[int]:
    """``"0-9,12,20-24"`` or ``@path`` (whitespace/comma separated integers)."""
    if text.startswith("@"):
        try:
            text = Path(text[1:]).read_text()
        except OSError as exc:
            raise argparse.ArgumentTypeError(f"cannot read vertex set: {exc}") from None
        text = ",".join(text.replace(",", " ").split())
    out = []
    for part in filter(None, (s.strip() for s in text.split(","))):
        try:
            if "-" in part:
                lo, hi = (int(x) for x in part.split("-", 1))
                if hi < lo:
                    raise ValueError
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad vertex set item {part!r}") from None
    return out


def unit_float(text: str) -> float:
    val = float(text)
    if not 0 < val < 1:
        raise argparse.ArgumentTypeError(f"{text} is not in (0, 1)")
    return val


def pos_int(text: str) -> int:
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return val


def nonneg_int(text: str) -> int:
    val = int(text)
    if val < 0:
        raise argparse.ArgumentTypeError(f"{text} is negative")
    return val


def prob(text: str) -> float:
    val = float(text)
    if not 0 <= val <= 1:
        raise argparse.ArgumentTypeError(f"{text} is not a probability")
    return val


def _load_graph(path: str) -> Graph:
    try:
        return read_edge_list(path)
    except FileNotFoundError:
        raise CliError(f"graph file not found: {path}") from None


def _blocks(n: int, k: int, size: int | None = None) -> list[list[int]]:
    size = size or n // k
    if size < 1 or size * k > n:
        raise CliError(f"cannot cut {k} blocks of size {size} from {n} vertices")
    return [list(range(i * size, (i + 1) * size)) for i in range(k)]


# ---------------------------------------------------------------------------
# output


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.ndarray, frozenset, set, tuple)):
        return sorted(obj) if isinstance(obj, (frozenset, set)) else list(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _flat(doc: dict, prefix: str = "") -> dict:
    out = {}
    for key, val in doc.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            out.update(_flat(val, name + "."))
        elif isinstance(val, (list, tuple)):
            out[name] = " ".join(str(x) for x in val)
        else:
            out[name] = val
    return out


def render(doc, fmt: str) -> str:
    if fmt == "csv":
        if isinstance(doc, str):
            return doc
        flat = _flat(doc)
        return ",".join(flat) + "\n" + ",".join(str(v) for v in flat.values()) + "\n"
    return json.dumps(doc, sort_keys=True, default=_jsonable) + "\n"


def emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands; each returns (text, exit_code)


def cmd_gen(a):
    fam = a.family
    if fam == "gnp":
        if a.p is None:
            if a.c is None:
                raise CliError("gen needs --p or --c")
            p = a.c * a.n ** (-1 + 1 / a.q)
        else:
            p = a.p
        if not 0 <= p <= 1:
            raise CliError(f"p = {p:g} is not a probability")
        G = gen_gnp(a.n, p, a.seed)
    elif fam == "complete":
        G = complete_graph(a.n)
    elif fam == "cycle":
        G = cycle_graph(a.n)
    elif fam == "path":
        G = path_graph(a.n)
    else:
        G = random_regular(a.n, a.degree, a.seed)
    if a.format == "json":
        return render({"n": G.n, "m": G.m, "edges": G.edge_array.tolist()}, "json"), 0
    return format_edge_list(G), 0


def cmd_subdivide(a):
    H = _load_graph(a.graph)
    Hq, smap = subdivide(H, a.q)
    if a.map:
        Path(a.map).write_text(smap.to_json() + "\n")
    if a.format == "json":
        doc = {"n": Hq.n, "m": Hq.m, "edges": Hq.edge_array.tolist(), "map": json.loads(smap.to_json())}
        return render(doc, "json"), 0
    return format_edge_list(Hq), 0


def cmd_check_regular(a):
    G = _load_graph(a.graph)
    halves = _blocks(G.n, 2)
    U = a.U if a.U is not None else halves[0]
    W = a.W if a.W is not None else halves[1]
    exact = a.mode == "exact" or (a.mode is None and len(U) <= EXHAUSTIVE_LIMIT)
    if exact:
        v = is_lower_regular_exact(G, U, W, a.eps, a.p)
    else:
        v = is_lower_regular_sampled(G, U, W, a.eps, a.p, a.trials, a.seed)
    return render(v.to_dict(), a.format or "json"), 0


def cmd_check_chain(a):
    G = _load_graph(a.graph)
    layers = a.layer if a.layer else _blocks(G.n, a.ell, a.size)
    chain = Chain(G, layers, a.eps)
    rep = check_chain_expanding(chain, a.delta, a.gamma, a.nu, a.C, a.t_samples, a.seed)
    doc = rep.to_dict()
    doc.update(ell=chain.ell, layer_size=chain.n, min_pair_edges=chain.m,
               nonspanning=len(rep.excluded))
    return render(doc, a.format or "json"), 0


def _pair_sets(a, G):
    halves = _blocks(G.n, 2)
    A = a.A if a.A is not None else halves[0]
    B = a.B if a.B is not None else halves[1]
    return A, B


def cmd_check_good(a):
    G = _load_graph(a.graph)
    A, B = _pair_sets(a, G)
    rep = check_good_pair(G, A, B, a.q, a.nu, a.c, a.samples, a.seed, include_self=a.include_self)
    return render(rep.to_dict(), a.format or "json"), 0


def cmd_probe_robust(a):
    G = _load_graph(a.graph)
    A, B = _pair_sets(a, G)
    doc = robustness_probe(G, A, B, a.q, a.nu, a.c, a.deletion_size, a.trials, a.seed)
    return render(doc, a.format or "json"), 0


def cmd_embed(a):
    G = _load_graph(a.graph)
    H = _load_graph(a.H)
    D = max(int(H.degrees.max(initial=0)), 1)
    if a.A is not None and a.pool:
        A, pools = a.A, a.pool
    elif a.A is None and not a.pool:
        blocks = _blocks(G.n, D + 1)
        A, pools = blocks[0], blocks[1:]
    else:
        raise CliError("give both --A and --pool, or neither")
    nu = a.nu if a.nu is not None else 1 / (4 * len(pools))
    code = 0
    state = EmbeddingState()
    try:
        emb = embed_subdivision(G, A, pools, H, a.q, nu, max_steps=a.max_steps, seed=a.seed,
                                policy=a.policy, state=state)
        ok, defects = verify_embedding(G, H, a.q, emb)
        doc = {"found": True, "verified": ok, "defects": defects, **json.loads(emb.to_json())}
    except EmbeddingFailed as exc:
        if exc.reason == "bad-input":
            raise CliError(str(exc)) from None
        doc = {"found": False, "reason": exc.reason, "detail": exc.detail,
               "steps": exc.state.step_count, "discards": len(exc.state.discard_log)}
        code = 3 if exc.reason == "step-budget" else 0
    if a.transcript:
        Path(a.transcript).write_text(transcript_jsonl(state.transcript))
    return render(doc, a.format or "json"), code


def _trial_config(a) -> harness.ExperimentConfig:
    keys = [f for f in harness.ExperimentConfig.__dataclass_fields__ if f != "seed"]
    vals = {k: getattr(a, k) for k in keys if getattr(a, k, None) is not None}
    vals["seed"] = a.seed
    try:
        cfg = harness.ExperimentConfig.from_mapping(vals)
        cfg.validate(layers=not a.exhaustive_colorings)
    except (KeyError, ValueError) as exc:
        raise CliError(str(exc)) from None
    return cfg


def cmd_trial(a):
    cfg = _trial_config(a)
    if a.exhaustive_colorings:
        G = _load_graph(a.graph) if a.graph else gen_gnp(cfg.n, cfg.p, harness.trial_seeds(cfg.seed)["graph"])
        H = harness.build_h(cfg, harness.trial_seeds(cfg.seed)["h"])
        try:
            ramsey, col = is_ramsey_exhaustive(G, H, cfg.q, cfg.r)
        except ValueError as exc:
            raise CliError(str(exc)) from None
        doc = {"n": G.n, "m": G.m, "ramsey": ramsey,
               "avoiding_coloring": None if col is None else col.colors.tolist()}
        return render(doc, a.format or "json"), 0
    G = _load_graph(a.graph) if a.graph else None
    res = harness.run_trial(cfg, G=G)
    doc = res.to_dict()
    if not a.timing:
        doc["wall_ms"] = None
    code = 3 if (not res.found and res.budget_exhausted) else 0
    return render(doc, a.format or "json"), code


def cmd_sweep(a):
    grid = {"n": a.n, "c": a.c, "q": a.q, "D": a.D, "r": a.r, "strategy": a.strategy,
            "seed": list(range(a.seed, a.seed + a.seeds))}
    base = {"mu": a.mu, "h_size": a.h_size}
    rows = harness.sweep(grid, a.parallelism, base)
    if not a.timing:
        for row in rows:
            row["wall_ms"] = ""
    if a.format == "json":
        return render({"rows": rows, "success_rate": {str(k): v for k, v in
                                                      harness.success_rates(rows).items()}},
                      "json"), 0
    return harness.sweep_csv(rows), 0


def cmd_first_moment(a):
    try:
        fm = harness.first_moment(a.n, a.p, a.degree, a.q, a.h_vertices)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    doc = {"n0": fm.n0, "e0": fm.e0, "bound": fm.bound, "log_bound": fm.log_bound}
    if a.format in ("json", "csv"):
        return render(doc, a.format), 0
    return f"n0={fm.n0} e0={fm.e0} bound={fm.bound:.6g} log_bound={fm.log_bound:.6g}\n", 0


def cmd_chernoff(a):
    doc = harness.chernoff_check(a.n, a.c, a.q, a.alpha, a.trials, a.seed)
    return render(doc, a.format or "json"), 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=nonneg_int, default=0, help="master random seed")
    common.add_argument("--out", help="write output to this path instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="output format (default depends on the subcommand)")
    common.add_argument("--config", help="flat key=value file; command-line flags take precedence")

    ap = _Parser(prog="subramsey", description="Monochromatic subdivisions in random graphs.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        p.set_defaults(func=func)
        return p

    p = add("gen", cmd_gen, "Generate a graph and print it as an edge list.")
    p.add_argument("--n", type=pos_int, required=True, help="number of vertices")
    p.add_argument("--p", type=prob, help="edge probability of G(n, p)")
    p.add_argument("--c", type=float, help="alternative to --p: p = c n^(-1+1/q)")
    p.add_argument("--q", type=pos_int, default=2, help="subdivision length used with --c")
    p.add_argument("--family", choices=("gnp", "complete", "cycle", "path", "random-regular"),
                   default="gnp")
    p.add_argument("--degree", type=pos_int, default=3, help="degree for random-regular")

    p = add("subdivide", cmd_subdivide, "Replace each edge by a path of length q.")
    p.add_argument("--graph", required=True, help="edge-list file of H")
    p.add_argument("--q", type=pos_int, required=True, help="path length per edge")
    p.add_argument("--map", help="also write the branch/path map as JSON here")

    p = add("check-regular", cmd_check_regular,
            "Test (eps, p)-lower-regularity of a bipartite pair: every U', W' with "
            "|U'| >= eps|U|, |W'| >= eps|W| spans density >= (1-eps)p.")
    p.add_argument("--graph", required=True)
    p.add_argument("--U", type=vertex_set, help="first side, e.g. 0-7 (default: first half)")
    p.add_argument("--W", type=vertex_set, help="second side (default: second half)")
    p.add_argument("--eps", type=unit_float, required=True, help="regularity tolerance")
    p.add_argument("--p", type=prob, required=True, help="reference density")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="mode", action="store_const", const="exact",
                      help=f"enumerate all U' (|U| <= {EXHAUSTIVE_LIMIT})")
    mode.add_argument("--sampled", dest="mode", action="store_const", const="sampled",
                      help="random subset pairs; a pass is one-sided evidence")
    p.add_argument("--trials", type=pos_int, default=1000, help="samples for --sampled")

    p = add("check-chain", cmd_check_chain,
            "Sampled expanding-chain test: how often do t random spanning singletons of V1 "
            "jointly fail to reach (1-nu)n vertices through the chain.")
    p.add_argument("--graph", required=True)
    p.add_argument("--layer", type=vertex_set, action="append",
                   help="one chain layer; repeat per layer, in cyclic order")
    p.add_argument("--ell", type=pos_int, default=2, help="number of equal blocks if no --layer")
    p.add_argument("--size", type=pos_int, help="block size if no --layer")
    p.add_argument("--eps", type=float, default=0.0, help="recorded regularity parameter")
    p.add_argument("--delta", type=float, default=1 / 16, help="allowed fraction of excluded vertices")
    p.add_argument("--gamma", type=float, default=1 / 16, help="failure-rate base: bound is gamma^t")
    p.add_argument("--nu", type=float, default=1 / 16, help="spanning slack")
    p.add_argument("--C", type=float, default=1.0, help="t0 = C n^(l+1) / m^l")
    p.add_argument("--t-samples", type=pos_int, default=200, help="draws per t")

    for name, func, help_ in (
            ("check-good", cmd_check_good,
             "Evaluate the four good-pair conditions (size, expansion, degree cap, "
             "small-set degree concentration) for (A, B)."),
            ("probe-robust", cmd_probe_robust,
             "Delete random B' from B and count vertices of A that stop expanding.")):
        p = add(name, func, help_)
        p.add_argument("--graph", required=True)
        p.add_argument("--A", type=vertex_set, help="default: first half of the vertices")
        p.add_argument("--B", type=vertex_set, help="default: second half")
        p.add_argument("--q", type=pos_int, default=2, help="path length")
        p.add_argument("--nu", type=unit_float, default=0.25, help="expansion slack")
        p.add_argument("--c", type=float, default=2.0, help="density constant, p = c n^(-1+1/q)")
        if name == "check-good":
            p.add_argument("--samples", type=nonneg_int, default=50, help="sampled B' sets")
            p.add_argument("--include-self", action="store_true",
                           help="count v itself as a reachable endpoint")
        else:
            p.add_argument("--deletion-size", type=nonneg_int, required=True, help="|B'|")
            p.add_argument("--trials", type=pos_int, default=50)

    p = add("embed", cmd_embed, "Greedily embed H^q with branch vertices in A and paths in the pools.")
    p.add_argument("--graph", required=True, help="host edge list")
    p.add_argument("--H", required=True, help="edge list of H")
    p.add_argument("--q", type=pos_int, default=2)
    p.add_argument("--A", type=vertex_set, help="branch layer (default: first of D+1 blocks)")
    p.add_argument("--pool", type=vertex_set, action="append", help="one pool B_t; repeat D times")
    p.add_argument("--nu", type=unit_float, help="expansion slack (default 1/(4D))")
    p.add_argument("--max-steps", type=pos_int, help="step budget (default 4|V(H)|)")
    p.add_argument("--policy", choices=POLICIES, default="greedy")
    p.add_argument("--transcript", help="write the run transcript as JSON lines here")

    p = add("trial", cmd_trial, "One end-to-end Ramsey trial on G(n, c n^(-1+1/q)).")
    _trial_flags(p)
    p.add_argument("--graph", help="use this host instead of sampling")
    p.add_argument("--exhaustive-colorings", action="store_true",
                   help="decide the Ramsey property over all colorings (m <= 20)")
    p.add_argument("--timing", action="store_true", help="record wall-clock time")

    p = add("sweep", cmd_sweep, "Grid of trials; CSV with one row per cell.")
    p.add_argument("--n", type=pos_int, nargs="+", default=[3000])
    p.add_argument("--c", type=float, nargs="+", default=[8.0])
    p.add_argument("--q", type=pos_int, nargs="+", default=[2])
    p.add_argument("--D", type=pos_int, nargs="+", default=[2])
    p.add_argument("--r", type=pos_int, nargs="+", default=[2])
    p.add_argument("--strategy", choices=STRATEGIES, nargs="+", default=["uniform"])
    p.add_argument("--seeds", type=nonneg_int, default=1, help="seeds per cell, from --seed upwards")
    p.add_argument("--mu", type=unit_float, default=0.2)
    p.add_argument("--h-size", type=unit_float, default=0.005)
    p.add_argument("--parallelism", type=pos_int, default=1)
    p.add_argument("--timing", action="store_true", help="fill the wall_ms column")

    p = add("first-moment", cmd_first_moment,
            "Expected-copies bound n^n0 p^e0 for H^q with H D-regular on h vertices.")
    p.add_argument("--n", type=pos_int, required=True, help="host vertices")
    p.add_argument("--p", type=float, required=True, help="edge probability")
    p.add_argument("--h-vertices", type=pos_int, required=True)
    p.add_argument("--degree", type=pos_int, required=True, help="D")
    p.add_argument("--q", type=pos_int, required=True)

    p = add("chernoff", cmd_chernoff,
            "Count vertices with more than 4 alpha n p neighbors in a random alpha n set.")
    p.add_argument("--n", type=pos_int, required=True)
    p.add_argument("--c", type=float, required=True, help="p = c n^(-1+1/q)")
    p.add_argument("--q", type=pos_int, default=2)
    p.add_argument("--alpha", type=unit_float, required=True)
    p.add_argument("--trials", type=pos_int, default=50)
    return ap


def _trial_flags(p) -> None:
    d = harness.ExperimentConfig()
    p.add_argument("--n", type=pos_int)
    p.add_argument("--q", type=pos_int)
    p.add_argument("--D", type=pos_int, help="max degree of H / number of pools")
    p.add_argument("--r", type=pos_int, help="number of colors")
    p.add_argument("--c", type=float, help=f"p = c n^(-1+1/q) (default {d.c})")
    p.add_argument("--mu", type=unit_float, help=f"layer fraction (default {d.mu})")
    p.add_argument("--nu", type=unit_float, help="embedder slack (default 1/(4D))")
    p.add_argument("--eps", type=unit_float, help=f"regularity tolerance (default {d.eps})")
    p.add_argument("--c-prime", dest="c_prime", type=unit_float,
                   help=f"cleaned density floor as a fraction of p (default {d.c_prime})")
    p.add_argument("--h-family", dest="h_family", choices=("cycle", "random-regular", "file"))
    p.add_argument("--h-size", dest="h_size", type=unit_float,
                   help=f"|V(H)| as a fraction of n (default {d.h_size})")
    p.add_argument("--h-file", dest="h_file")
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--star-budget", dest="star_budget", type=pos_int)
    p.add_argument("--policy", choices=POLICIES)
    p.add_argument("--fallback", action="store_const", const=True,
                   help="direct search in the largest color class if the pipeline fails")
    p.add_argument("--fallback-budget", dest="fallback_budget", type=pos_int)
    p.add_argument("--require-good", dest="require_good", action="store_const", const=True)


def read_config(path: str) -> dict[str, str]:
    p = Path(path)
    if not p.is_file():
        raise CliError("config not found")
    out = {}
    for lineno, line in enumerate(p.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def _config_path(argv: list[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(parser: argparse.ArgumentParser, argv: list[str], path: str) -> None:
    """Install config values as subcommand defaults, so explicit flags still win."""
    values = read_config(path)
    sp = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((tok for tok in argv if tok in sp.choices), None)
    if command is None:
        return
    sub = sp.choices[command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        act = actions.get(key)
        if act is None or key in ("config", "help", "func"):
            raise CliError(f"unknown config key {key!r} for {command}")
        try:
            if act.nargs in ("+", "*"):
                val = [act.type(x) if act.type else x for x in raw.replace(",", " ").split()]
            elif act.nargs == 0:
                val = act.const if raw.lower() in ("1", "true", "yes", "on") else act.default
            else:
                val = act.type(raw) if act.type else raw
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise CliError(f"config key {key}: {exc}") from None
        items = val if isinstance(val, list) else [val]
        if act.choices is not None and any(x not in act.choices for x in items):
            raise CliError(f"config key {key}: {raw!r} not in {list(act.choices)}")
        if isinstance(act, argparse._AppendAction):
            val = [val]
        defaults[key] = val
        act.required = False
    sub.set_defaults(**defaults)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        path = _config_path(argv)
        if path is not None:
            _apply_config(parser, argv, path)
        ns = parser.parse_args(argv)
        text, code = ns.func(ns)
    except (CliError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    emit(text, ns.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
