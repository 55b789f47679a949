"""Two-unit valley-day study: legacy windows versus the configuration model.

Usage: python3 scripts/run_two_unit.py [--backend builtin|highs] [--out results.json]
"""

import argparse

from pshuc import io as pio
from pshuc.analysis import compare_models
from pshuc.model import two_unit_case
from pshuc.solver import get_solver, register_backend


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--backend", default="builtin")
    ap.add_argument("--out")
    args = ap.parse_args()
    register_backend(args.backend)
    case = two_unit_case()
    rep = compare_models(case, solver=get_solver())
    print(f"legacy thermal cost   {rep.legacy_objective:12.2f}")
    print(f"proposed thermal cost {rep.proposed_objective:12.2f}")
    print(f"improvement           {rep.objective_improvement_pct:12.4f} %")
    for flag in rep.flags:
        print("flag:", flag)
    print("\n t  net_load  legacy(A,B)   proposed(A,B)  lmp_legacy lmp_proposed")
    for t, load in enumerate(case.horizon.net_load):
        row = []
        for run in (rep.legacy, rep.proposed):
            s = run.schedule
            row.append(" ".join(f"{s.q_gen[g][t] - s.q_pump[g][t]:+6.0f}" for g in s.q_gen))
        print(f"{t:2d} {load:9.0f}  {row[0]}  {row[1]}  {rep.legacy.prices.lmp[t]:10.2f} {rep.proposed.prices.lmp[t]:12.2f}")
    for g, (old, new) in rep.profits.items():
        print(f"{g}: profit legacy {old.profit:10.2f}  proposed {new.profit:10.2f}")
    if args.out:
        pio.save_results(pio.benefit_results(rep), args.out)
        print("wrote", args.out)


if __name__ == "__main__":
    main()
