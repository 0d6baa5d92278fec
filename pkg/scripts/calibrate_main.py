"""Main-grid calibration: success rate of the star-configuration pipeline
against c, for q=2, D=2, r=2, n=3000, uniform coloring, 20 seeds per cell.

Writes the rates into src/subramsey/calibration.json under "main_grid".
"""

import argparse
import json
from pathlib import Path

from subramsey.harness import sweep, success_rates

CAL = Path(__file__).resolve().parents[1] / "src" / "subramsey" / "calibration.json"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=float, nargs="+", default=[4, 5, 5.5, 6, 6.5, 7, 8, 10])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--parallelism", type=int, default=1)
    ap.add_argument("--dry-run", action="store_true")
    args = ap.parse_args()
    base = {"n": 3000, "q": 2, "D": 2, "r": 2, "strategy": "uniform", "mu": 0.2, "h_size": 0.005}
    rows = sweep({"c": args.c, "seed": list(range(args.seeds))}, args.parallelism, base)
    rates = success_rates(rows)
    for c, rate in rates.items():
        print(f"c={c:<5} success={rate:.2f}")
    if args.dry_run:
        return
    doc = json.loads(CAL.read_text()) if CAL.exists() else {}
    floor = min((c for c, r in rates.items() if r >= 0.5), default=None)
    doc["main_grid"] = {"base": base, "seeds": args.seeds, "c_grid": list(rates),
                        "rates": [rates[c] for c in rates], "min_c_at_half": floor}
    CAL.write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main()
