"""Which degrees of D^2 a and D Q(A) vanish at a given working order.

At working order N the abelian connection r is known through degree N.
(D a)_m needs r_{m+2}, and (D^2 a)_m also reads (D a)_{m+1}, so without
extra working degrees the identities only hold in a window below N.  This
script prints the nonvanishing degrees for a range of slacks.

    python3 scripts/truncation_windows.py --order 4 --max-slack 3
"""

import argparse
import random

from fedosov.checks import curved_context
from fedosov.coefficients import ExactRing
from fedosov.core import FedosovContext
from fedosov.data import random_form_element, random_section
from fedosov.weyl import WeylElement, WeylSpace


def bad_degrees(x, top):
    return [m for m in range(top + 1) if not x.homogeneous(m).is_zero()]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--order", type=int, default=4)
    ap.add_argument("--max-slack", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    N = args.order
    base = curved_context(ExactRing(2), 2, N, random.Random(args.seed))
    rng = random.Random(args.seed + 1)
    a = random_form_element(base.space, rng, max_degree=2, form_degree=0)
    A = random_section(base.space, rng, h_terms=2)
    for slack in range(args.max_slack + 1):
        sp = WeylSpace(base.space.geo, base.space.ring, base.space.rank, N + slack)
        ctx = FedosovContext(sp, base.symp, base.bundle)
        a_hi, A_hi = WeylElement(sp, a.terms), WeylElement(sp, A.terms)
        dd = ctx.D(ctx.D(a_hi, upto=N + 1), upto=N)
        dq = ctx.D(ctx.quantize(A_hi, upto=N + 1), upto=N)
        print(f"slack {slack}: D^2 a nonzero in degrees {bad_degrees(dd, N)}, "
              f"D Q(A) nonzero in degrees {bad_degrees(dq, N)}")


if __name__ == "__main__":
    main()
