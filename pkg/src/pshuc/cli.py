"""Command-line interface.

Exit codes: 0 success within gap, 2 usage, 3 invalid input, 4 infeasible,
5 gap not reached (node limit), 6 solver failure, 7 file I/O.
Failures print one JSON object ``{"error": <category>, "message": ...}`` to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import io as pio
from .analysis import compact_summary, compactness_report, compare_models, scenario_cases
from .formulation import ObjectiveMode, build_legacy, build_proposed, decode_schedule, thermal_cost
from .milp import model_stats
from .model import CaseValidationError, with_net_load
from .pricing import FixedLpInfeasible, compute_lmp
from .solver import DEFAULT_GAP, BackendUnavailable, MipInfeasible, MipStatus, NumericalBreakdown, get_solver, register_backend

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_GAP, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4, 5, 6, 7


class CliFailure(Exception):
    def __init__(self, code: int, category: str, message: str):
        super().__init__(message)
        self.code, self.category = code, category


def _build(case, model: str, objective: str):
    if model == "legacy":
        return build_legacy(case)
    return build_proposed(case, ObjectiveMode(objective))


def _solve(case, args):
    model, vmap = _build(case, args.model, args.objective)
    mip = get_solver().solve_mip(model, args.gap, args.node_limit)
    if mip.status is MipStatus.INFEASIBLE:
        raise CliFailure(EXIT_INFEASIBLE, "infeasible", f"{args.model} model has no feasible commitment")
    if not mip.has_incumbent:
        raise CliFailure(EXIT_GAP, "node_limit", f"no incumbent within {args.node_limit} nodes")
    return model, vmap, mip


def cmd_solve(args) -> int:
    case = pio.load_case(args.case)
    model, vmap, mip = _solve(case, args)
    schedule = decode_schedule(case, vmap, mip)
    prices = compute_lmp(model, mip, vmap)
    meta = {
        "objective": mip.objective,
        "thermal_cost": thermal_cost(case, schedule),
        "best_bound": mip.best_bound,
        "gap": mip.gap,
        "nodes": mip.nodes_explored,
        "status": mip.status.value,
        "backend": get_solver().name,
    }
    doc = pio.results_document([pio.run_to_dict(args.model, schedule, prices, meta)])
    if args.out:
        pio.save_results(doc, args.out)
    print(json.dumps({k: meta[k] for k in ("status", "objective", "gap", "nodes")}))
    if mip.status is MipStatus.NODE_LIMIT:
        raise CliFailure(EXIT_GAP, "gap_not_reached", f"stopped at gap {mip.gap:.3g} > {args.gap:g}")
    return EXIT_OK


def _scenario_loads(case, source: str | None, seed: int):
    if source is None:
        return [case]
    p = Path(source)
    if p.exists():
        loads = pio._parse_json(p.read_text(), source)
        if not isinstance(loads, list) or not all(isinstance(x, list) for x in loads):
            raise pio.SchemaViolation("scenarios", "expected a JSON list of net-load lists")
        return [with_net_load(case, x) for x in loads]
    try:
        n = int(source)
    except ValueError:
        raise CliFailure(EXIT_USAGE, "usage", f"--scenarios must be a count or an existing file, got {source!r}") from None
    return scenario_cases(case, n, seed)


def cmd_compare(args) -> int:
    case = pio.load_case(args.case)
    cases = _scenario_loads(case, args.scenarios, args.seed)
    reports, all_within_gap = [], True
    for i, c in enumerate(cases):
        rep = compare_models(c, args.gap, args.node_limit)
        all_within_gap &= rep.legacy.status != "node_limit" and rep.proposed.status != "node_limit"
        entry = pio.benefit_to_dict(rep)
        entry["scenario"] = i
        entry["net_load_mw"] = list(c.horizon.net_load)
        reports.append(entry)
    summary = {
        "scenarios": len(reports),
        "dominance_holds": sum(r["dominance_holds"] for r in reports),
        "mean_improvement_pct": sum((r["objective_improvement_pct"] or 0.0) for r in reports) / len(reports),
    }
    if len(cases) == 1 and args.scenarios is None:
        doc = pio.benefit_results(rep)
    else:
        doc = {"version": pio.RESULTS_VERSION, "runs": [], "benefit": None, "scenarios": reports, "summary": summary}
    if args.out:
        pio.save_results(doc, args.out)
    print(json.dumps(summary))
    if not all_within_gap:
        raise CliFailure(EXIT_GAP, "gap_not_reached", "at least one solve stopped at the node limit")
    return EXIT_OK


def cmd_stats(args) -> int:
    case = pio.load_case(args.case)
    model, _ = _build(case, args.model, args.objective)
    out = {"model": args.model, "stats": model_stats(model)._asdict()}
    if args.model == "proposed":
        baseline, _ = build_proposed(case, ObjectiveMode(args.objective), storage=False)
        out["compactness"] = compact_summary(compactness_report(model, baseline, case))
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_lmp(args) -> int:
    case = pio.load_case(args.case)
    model, vmap, mip = _solve(case, args)
    prices = compute_lmp(model, mip, vmap)
    try:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "lmp", "model_tag"])
            for t, p in enumerate(prices.lmp):
                w.writerow([t, p, args.model])
    except OSError as exc:
        raise pio.IoError(str(exc)) from exc
    print(json.dumps({"intervals": len(prices.lmp), "degenerate": prices.degenerate}))
    return EXIT_OK


def cmd_plot_data(args) -> int:
    pio.emit_plot_data(pio.load_results(args.results), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pshuc", description="Pumped-storage unit commitment studies.")
    p.add_argument("--backend", help="solver backend (builtin or highs); overrides PSH_SOLVER_BACKEND")
    sub = p.add_subparsers(dest="command", required=True)

    def solve_opts(sp, out_required=False):
        sp.add_argument("--case", required=True, help="case JSON file")
        sp.add_argument("--model", choices=["proposed", "legacy"], default="proposed")
        sp.add_argument("--objective", choices=[m.value for m in ObjectiveMode], default=ObjectiveMode.THERMAL_ONLY.value,
                        help="objective of the proposed model (default thermal_only)")
        sp.add_argument("--gap", type=float, default=DEFAULT_GAP, help="relative MIP gap (default 1e-6)")
        sp.add_argument("--node-limit", type=int, default=None, help="branch-and-bound node limit (default none)")
        sp.add_argument("--out", required=out_required)

    s = sub.add_parser("solve", help="clear one model and write a results JSON")
    solve_opts(s)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("compare", help="legacy vs proposed under matched reservoir bounds")
    c.add_argument("--case", required=True)
    c.add_argument("--scenarios", help="number of random net-load scenarios, or a JSON file of net-load lists")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--gap", type=float, default=DEFAULT_GAP)
    c.add_argument("--node-limit", type=int, default=None)
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    st = sub.add_parser("stats", help="model size and storage-row accounting")
    st.add_argument("--case", required=True)
    st.add_argument("--model", choices=["proposed", "legacy"], default="proposed")
    st.add_argument("--objective", choices=[m.value for m in ObjectiveMode], default=ObjectiveMode.THERMAL_ONLY.value)
    st.set_defaults(func=cmd_stats)

    lm = sub.add_parser("lmp", help="write interval prices as CSV")
    solve_opts(lm, out_required=True)
    lm.set_defaults(func=cmd_lmp)

    pd = sub.add_parser("plot-data", help="tidy CSV from a results file")
    pd.add_argument("--results", required=True)
    pd.add_argument("--out", required=True)
    pd.set_defaults(func=cmd_plot_data)
    return p


def _fail(code: int, category: str, message: str) -> int:
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.backend:
            register_backend(args.backend)
        return args.func(args)
    except CliFailure as exc:
        return _fail(exc.code, exc.category, str(exc))
    except pio.ParseError as exc:
        return _fail(EXIT_INPUT, "parse_error", str(exc))
    except pio.SchemaViolation as exc:
        return _fail(EXIT_INPUT, "schema_violation", str(exc))
    except CaseValidationError as exc:
        return _fail(EXIT_INPUT, "invalid_case", str(exc))
    except MipInfeasible as exc:
        return _fail(EXIT_INFEASIBLE, "infeasible", str(exc))
    except (BackendUnavailable, NumericalBreakdown, FixedLpInfeasible) as exc:
        return _fail(EXIT_SOLVER, "solver_error", str(exc))
    except pio.IoError as exc:
        return _fail(EXIT_IO, "io_error", str(exc))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
