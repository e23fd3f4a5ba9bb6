"""Float-backend smoke runs on T^4.

    python3 scripts/t4_smoke.py --kind P --order 2

Palatini uses the SO(3,1) fibre metric, so the bundle has rank 16.  At
order 4 the t-dependent homotopy data need more than 5 GB with the dense
grid representation; order 2 (rows h^0 and h^1) runs in well under a
minute.  Prints |Im|/|Re| per nonzero coefficient and the classical h^0
oracle.
"""

import argparse
import time

from fedosov.checks import torus4_smoke


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--kind", default="P")
    ap.add_argument("--order", type=int, default=2)
    ap.add_argument("--seed", type=int, default=9)
    args = ap.parse_args()

    t0 = time.perf_counter()
    res, rep = torus4_smoke(args.kind, N=args.order, seed=args.seed)
    for r in res:
        print(r.line())
    for row in rep["rows"]:
        ratio = abs(row["im"]) / abs(row["re"]) if row["re"] else float("nan")
        print(f"h^{row['h']} eps^{row['eps']}: re={row['re']:.12g} im={row['im']:.3g} |Im|/|Re|={ratio:.2e}")
    print("classical h^0:", {m: complex(v).real for m, v in (rep["oracle"] or {}).items()})
    print(f"{time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
