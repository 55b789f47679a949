"""Seeded batch of random net-load days through the matched-bound comparison.

Usage: python3 scripts/benefit_batch.py [--n 100] [--seed 2024] [--backend highs]
       [--intervals 24] [--node-limit N] [--out batch.json]

The built-in solver is practical up to about 12 intervals (tens of seconds per day); run full days on HiGHS.
"""

import argparse
import json
import time

import numpy as np

from pshuc import io as pio
from pshuc.analysis import compare_models, scenario_cases
from pshuc.model import two_unit_case
from pshuc.solver import DEFAULT_GAP, get_solver, register_backend


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--backend", default="highs")
    ap.add_argument("--intervals", type=int, default=24)
    ap.add_argument("--gap", type=float, default=DEFAULT_GAP)
    ap.add_argument("--node-limit", type=int)
    ap.add_argument("--out")
    args = ap.parse_args()
    register_backend(args.backend)
    base = two_unit_case()
    if args.intervals != 24:
        base = two_unit_case(base.horizon.net_load[: args.intervals])
    docs, imp, held = [], [], 0
    t0 = time.perf_counter()
    for i, case in enumerate(scenario_cases(base, args.n, seed=args.seed)):
        rep = compare_models(case, args.gap, args.node_limit, solver=get_solver())
        held += rep.dominance_holds
        imp.append(rep.objective_improvement_pct or 0.0)
        docs.append(pio.benefit_to_dict(rep))
        print(f"{i:3d} legacy={rep.legacy_objective:11.2f} proposed={rep.proposed_objective:11.2f} "
              f"improvement={imp[-1]:7.4f}% dominance={rep.dominance_holds}")
    print(f"\ndominance {held}/{args.n}; improvement mean {np.mean(imp):.4f}% "
          f"min {min(imp):.4f}% max {max(imp):.4f}%; {time.perf_counter() - t0:.1f}s")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"seed": args.seed, "backend": args.backend, "reports": docs}, fh, indent=1)


if __name__ == "__main__":
    main()
