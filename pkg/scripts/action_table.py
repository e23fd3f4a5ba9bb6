"""Coefficient tables of the five gravity actions on T^2.

    python3 scripts/action_table.py --order 4 --eps 2 --seeds 0 1 2
    python3 scripts/action_table.py --background flat   # everything vanishes in 2D

Prints one line per (kind, seed) with wall time and the exact (h, eps)
table; imaginary parts are printed so that a nonzero one is obvious.
"""

import argparse
import random
import time

from fedosov.checks import action_checks
from fedosov.coefficients import ExactRing
from fedosov.geometry import ChartGeometry
from fedosov.gravity import KINDS


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--order", type=int, default=4)
    ap.add_argument("--eps", type=int, default=2)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--kinds", nargs="+", default=list(KINDS))
    ap.add_argument("--background", choices=["curved", "flat"], default="curved")
    args = ap.parse_args()

    ring = ExactRing(2, eps_order=args.eps)
    geo = ChartGeometry(1)
    for seed in args.seeds:
        for kind in args.kinds:
            t0 = time.perf_counter()
            res, rep = action_checks(kind, ring, geo, args.order, random.Random(f"{seed}:{kind}"),
                                     curved_background=args.background == "curved")
            dt = time.perf_counter() - t0
            verdict = "ok" if all(r.passed for r in res) else "FAIL"
            cells = "  ".join(f"h^{r['h']} e^{r['eps']}: {r['re']} + {r['im']}i" for r in rep["rows"]) or "0"
            print(f"{kind:5s} seed={seed} {verdict} {dt:6.2f}s  {cells}")


if __name__ == "__main__":
    main()
