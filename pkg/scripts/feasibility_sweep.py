"""Sweep random convex PWQ instances through the constructive lift, the QP
lift and the analytic certificate; print a one-line tally per segment count.

    python scripts/feasibility_sweep.py --seeds 1000 --max-segments 20
"""
import argparse
import time

import numpy as np

from pwqnet.lifting import CostSpec, algorithm1, check_lift_conditions, solve_lift_qp_full
from pwqnet.pwq import generate_random_convex_pwq
from pwqnet.verify import CERTIFIED, verify_max_representation_1d


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--seeds", type=int, default=1000)
    ap.add_argument("--max-segments", type=int, default=20)
    ap.add_argument("--qp", action="store_true", help="also solve the sum-of-squares QP")
    args = ap.parse_args()

    tally = {}
    t0 = time.perf_counter()
    for seed in range(args.seeds):
        s = 1 + seed % args.max_segments
        f = generate_random_convex_pwq(seed, s)
        h = algorithm1(f)
        row = tally.setdefault(s, {"n": 0, "feasible": 0, "certified": 0, "gain": []})
        row["n"] += 1
        row["feasible"] += check_lift_conditions(f, h).feasible
        row["certified"] += verify_max_representation_1d(f, h).verdict == CERTIFIED
        if args.qp:
            res = solve_lift_qp_full(f, CostSpec.sum_squares())
            row["gain"].append(res.warm_start_cost - res.cost)
    print(f"{'s':>3} {'n':>5} {'feasible':>9} {'certified':>10}" + ("  median QP gain" if args.qp else ""))
    for s in sorted(tally):
        r = tally[s]
        extra = f"  {np.median(r['gain']):.4g}" if args.qp else ""
        print(f"{s:>3} {r['n']:>5} {r['feasible']:>9} {r['certified']:>10}{extra}")
    print(f"{time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
