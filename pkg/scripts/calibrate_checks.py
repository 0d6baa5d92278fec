"""Calibration runs for the checker-level examples.

* star: find_star_config on G(3000, 3 n^-1/2), r=2, D=2, q=2, layers of 150, c'=0.1,
  eps in {0.3, 0.5, 0.6}
* chain: check_chain_expanding on two 150-layers of G(3000, c n^-1/2), nu=gamma=delta=1/16,
  c in {3, 6, 8, 10}
* robustness: robustness_probe on (A, B) halves of G(2000, 3 n^-1/2) with |B'| < n/c^4
* chernoff: chernoff_check(q=2, c=3, alpha=0.2) at n = 1000, 2000, 4000, 50 trials

Results are merged into src/subramsey/calibration.json.
"""

import argparse
import json
import math
from pathlib import Path

import numpy as np

from subramsey.coloring import color_edges
from subramsey.expansion import Chain, check_chain_expanding, robustness_probe
from subramsey.graph import gen_gnp
from subramsey.harness import chernoff_check
from subramsey.regularity import find_star_config

CAL = Path(__file__).resolve().parents[1] / "src" / "subramsey" / "calibration.json"
N = 3000


def star(seeds: int) -> dict:
    """Success rate over an eps grid; the example pins the smallest eps reaching 8/10."""
    p = 3 / math.sqrt(N)
    out = {"n": N, "p": p, "mu": 150 / N, "c_prime": 0.1, "budget": 200, "by_eps": {}}
    for eps in (0.3, 0.5, 0.6):
        found = []
        for s in range(seeds):
            G = gen_gnp(N, p, s)
            col = color_edges(G, 2, "uniform", s)
            cfg = find_star_config(G, col, 2, 2, 2, 150 / N, eps, 0.1, s, 200, p=p)
            found.append(cfg is not None)
        out["by_eps"][str(eps)] = {"found": found, "rate": sum(found) / seeds}
    ok = [float(e) for e, v in out["by_eps"].items() if v["rate"] >= 0.8]
    out["eps"] = min(ok) if ok else None
    return out


def chain(seeds: int) -> dict:
    """Verdicts for the stated c = 3 and for denser hosts, to locate where it turns."""
    out = {"n": N, "layer": 150, "ell": 2, "nu": 1 / 16, "C": 1.0, "by_c": {}}
    for c in (3.0, 6.0, 8.0, 10.0):
        p = c / math.sqrt(N)
        verdicts, nonspanning = [], []
        for s in range(seeds):
            G = gen_gnp(N, p, s)
            ch = Chain(G, [range(150), range(150, 300)])
            rep = check_chain_expanding(ch, 1 / 16, 1 / 16, 1 / 16, 1.0, 200, s)
            verdicts.append(rep.verdict)
            nonspanning.append(len(rep.excluded))
        out["by_c"][str(c)] = {"p": p, "verdicts": verdicts, "nonspanning": nonspanning,
                               "consistent_rate": verdicts.count("consistent") / seeds}
    return out


def robustness(seeds: int) -> dict:
    n, c, q, nu = 1000, 3.0, 2, 0.25
    p = c / math.sqrt(n)
    size = math.ceil(n / c ** (q + 2)) - 1
    out = []
    for s in range(seeds):
        G = gen_gnp(2 * n, p, s)
        out.append(robustness_probe(G, range(n), range(n, 2 * n), q, nu, c, size, 20, s)["p95"])
    return {"n": n, "c": c, "q": q, "nu": nu, "deletion_size": size, "p95": out,
            "budget": n ** (1 - 1 / (2 * q))}


def chernoff(trials: int) -> dict:
    rows = {}
    for n in (1000, 2000, 4000):
        res = chernoff_check(n, 3.0, 2, 0.2, trials, n)
        rows[str(n)] = {"max": res["max"], "mean": res["mean"], "K": res["ratio"],
                        "threshold": res["threshold"], "mean_neighbors": 0.2 * n * res["p"]}
    return {"c": 3.0, "q": 2, "alpha": 0.2, "trials": trials, "by_n": rows}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--only", nargs="*", default=["star", "chain", "robustness", "chernoff"])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--dry-run", action="store_true")
    args = ap.parse_args()
    doc = json.loads(CAL.read_text()) if CAL.exists() else {}
    jobs = {"star": lambda: star(args.seeds), "chain": lambda: chain(args.seeds),
            "robustness": lambda: robustness(args.seeds), "chernoff": lambda: chernoff(50)}
    for name in args.only:
        doc[name] = jobs[name]()
        print(name, json.dumps(doc[name]))
    if not args.dry_run:
        CAL.write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main()
