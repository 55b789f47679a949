"""Compare branch-and-bound against exhaustive mode enumeration on small random cases.

Usage: python3 scripts/oracle_check.py [--n 60] [--seed 17] [--max-intervals 6]
"""

import argparse
import math
import time

import numpy as np

from pshuc.analysis import brute_force_search, random_small_case
from pshuc.formulation import build_proposed
from pshuc.solver import solve_mip


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=60)
    ap.add_argument("--seed", type=int, default=17)
    ap.add_argument("--max-intervals", type=int, default=6)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    bad = 0
    t0 = time.perf_counter()
    for i in range(args.n):
        case = random_small_case(rng, max_intervals=args.max_intervals)
        mip = solve_mip(build_proposed(case)[0])
        bf = brute_force_search(case)
        got = mip.objective if mip.has_incumbent else math.inf
        same = got == bf.objective or abs(got - bf.objective) <= 1e-6 * max(1.0, abs(bf.objective))
        bad += not same
        print(f"{i:3d} T={case.horizon.n_intervals} mip={got:12.4f} brute={bf.objective:12.4f} "
              f"sequences={bf.sequences_tried:4d} {'ok' if same else 'MISMATCH'}")
    print(f"\n{args.n - bad}/{args.n} agree; {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
