"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line (collected again in the
pytest terminal summary). Run directly with ``python3 tests/test_acceptance.py``
to get just those lines.
"""

from __future__ import annotations

import math
import time
from dataclasses import replace

import numpy as np

from pshuc.analysis import (
    brute_force_search,
    compactness_report,
    compare_models,
    derive_matched_bounds,
    random_shape_case,
    random_small_case,
    scenario_cases,
)
from pshuc.checks import commitment_violations, schedule_violations
from pshuc.formulation import build_legacy, build_proposed, decode_schedule
from pshuc.model import Case, Mode, two_unit_case
from pshuc.pricing import compute_lmp
from pshuc.solver import (
    DEFAULT_GAP,
    OPERATIONAL_GAP,
    HighsBackend,
    MipStatus,
    SolverHandle,
    solve_mip,
)

REL = 1e-6
LINES: list[str] = []
SCENARIO_SEED = 2024
ORACLE_SEED = 17


def report(cid: str, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {cid} {title}: {detail}"
    LINES.append(line)
    print(line)
    assert ok, line


def close(a: float, b: float, rel: float = REL) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


# ---------------------------------------------------------------- shared corpus


_cache: dict[str, object] = {}


def oracle_corpus():
    """(case, mip solution, vmap, brute-force result) for the randomized oracle instances."""
    if "oracle" not in _cache:
        rng = np.random.default_rng(ORACLE_SEED)
        out = []
        t0 = time.perf_counter()
        for _ in range(60):
            case = random_small_case(rng, max_intervals=6)
            model, vmap = build_proposed(case)
            mip = solve_mip(model, DEFAULT_GAP)
            bf = brute_force_search(case)
            out.append((case, model, vmap, mip, bf))
        _cache["oracle"] = (out, time.perf_counter() - t0)
    return _cache["oracle"]


def scenario_corpus():
    """100 seeded full-day scenarios through the matched-bound protocol on the HiGHS backend."""
    if "scenarios" not in _cache:
        handle = SolverHandle(HighsBackend())
        t0 = time.perf_counter()
        reports = [(c, compare_models(c, DEFAULT_GAP, solver=handle))
                   for c in scenario_cases(two_unit_case(), 100, seed=SCENARIO_SEED)]
        _cache["scenarios"] = (reports, time.perf_counter() - t0)
    return _cache["scenarios"]


def feature_cases():
    base = two_unit_case()
    r = base.reservoirs[0]
    minup = tuple(replace(g, min_up_hours={Mode.GEN: 3.0, Mode.PUMP: 2.0}) for g in base.psh_units)
    return {
        "plain": replace(base, legacy_bids=None),
        "plant_exclusive+pump_start": replace(base, reservoirs=(replace(r, plant_exclusive=True, pump_start_limit=1),)),
        "min_up": replace(base, psh_units=minup),
    }


# ---------------------------------------------------------------- criteria


def test_c1_two_unit_reproduction():
    t0 = time.perf_counter()
    case = two_unit_case()
    rep = compare_models(case)
    sched = rep.proposed.schedule
    load = case.horizon.net_load
    pump_hours = sorted({t for g in sched.modes for t, m in enumerate(sched.modes[g]) if m is Mode.PUMP})
    idle = [t for t in range(24) if t not in pump_hours]
    cheapest = bool(pump_hours) and max(load[t] for t in pump_hours) <= min(load[t] for t in idle)
    legacy_pump = sorted({t for g in rep.legacy.schedule.modes for t, m in enumerate(rep.legacy.schedule.modes[g])
                          if m is Mode.PUMP})
    improvement = rep.objective_improvement_pct
    strictly = rep.proposed_objective < rep.legacy_objective - REL * abs(rep.legacy_objective)

    # oracle on a one-unit, six-hour cut around the valley (full size is 3^48 sequences)
    sub = Case(case.psh_units[:1], case.reservoirs, case.thermal_units,
               replace(case.horizon, n_intervals=6, net_load=load[4:10]))
    sub_model, _ = build_proposed(sub)
    sub_mip = solve_mip(sub_model)
    sub_bf = brute_force_search(sub)
    oracle_ok = close(sub_mip.objective, sub_bf.objective)

    # full-size objectives cross-checked against HiGHS on the same models
    highs = HighsBackend()
    lm, _ = build_legacy(case)
    pm, _ = build_proposed(derive_matched_bounds(case, rep.legacy.schedule))
    ext_ok = close(highs.solve_mip(lm).objective, rep.legacy.mip_objective) and close(
        highs.solve_mip(pm).objective, rep.proposed.mip_objective)
    elapsed = time.perf_counter() - t0
    ok = improvement > 0 and strictly and cheapest and oracle_ok and ext_ok and elapsed < 10.0
    report(
        "C1", "two-unit structural reproduction", ok,
        f"legacy={rep.legacy_objective:.2f} proposed={rep.proposed_objective:.2f} improvement={improvement:.3f}% "
        f"proposed pump hours={pump_hours} legacy pump hours={legacy_pump} cheapest-hours={cheapest} "
        f"oracle(T=6 cut) mip={sub_mip.objective:.4f} brute={sub_bf.objective:.4f} highs-agree={ext_ok} "
        f"time={elapsed:.2f}s (<10s)",
    )


def test_c2_oracle_equivalence():
    corpus, elapsed = oracle_corpus()
    mism = [i for i, (_, _, _, mip, bf) in enumerate(corpus)
            if not close(mip.objective if mip.has_incumbent else math.inf, bf.objective)]
    feasible = sum(1 for *_, bf in corpus if math.isfinite(bf.objective))
    ok = not mism and len(corpus) >= 50 and elapsed < 60.0
    report("C2", "oracle equivalence", ok,
           f"{len(corpus) - len(mism)}/{len(corpus)} match within {REL:g} rel ({feasible} feasible), "
           f"mismatches={mism} time={elapsed:.1f}s (<60s)")


def test_c3_objective_dominance():
    reports, elapsed = scenario_corpus()
    held = [rep.dominance_holds for _, rep in reports]
    imp = [rep.objective_improvement_pct for _, rep in reports]
    worst = min(imp)
    ok = all(held) and len(held) == 100
    report("C3", "objective dominance (matched-bound protocol, HiGHS backend)", ok,
           f"{sum(held)}/{len(held)} scenarios proposed <= legacy + {REL:g}|legacy|; "
           f"improvement min={worst:.4f}% mean={np.mean(imp):.4f}% max={max(imp):.4f}% time={elapsed:.1f}s")


def test_c4_constraint_invariants():
    checked, problems = 0, []
    for name, case in feature_cases().items():
        model, vmap = build_proposed(case)
        mip = solve_mip(model)
        sched = decode_schedule(case, vmap, mip)
        problems += [f"{name}: {p}" for p in schedule_violations(case, sched) + commitment_violations(case, vmap, mip)]
        checked += 1
    lm, lmap = build_legacy(two_unit_case())
    problems += schedule_violations(two_unit_case(), decode_schedule(two_unit_case(), lmap, solve_mip(lm)))
    checked += 1
    corpus, _ = oracle_corpus()
    for i, (case, _, vmap, mip, _) in enumerate(corpus):
        if mip.has_incumbent:
            sched = decode_schedule(case, vmap, mip)
            problems += [f"oracle#{i}: {p}" for p in schedule_violations(case, sched) + commitment_violations(case, vmap, mip)]
            checked += 1
    reports, _ = scenario_corpus()
    for i, (case, rep) in enumerate(reports):
        derived = derive_matched_bounds(case, rep.legacy.schedule)
        problems += [f"scenario#{i} legacy: {p}" for p in schedule_violations(case, rep.legacy.schedule)]
        problems += [f"scenario#{i} proposed: {p}" for p in schedule_violations(derived, rep.proposed.schedule)]
        checked += 2
    report("C4", "constraint invariant suite", not problems,
           f"{checked} schedules checked, {len(problems)} violations" + (f"; first: {problems[0]}" if problems else ""))


def test_c5_pricing():
    def fixed_objective(load):
        case = two_unit_case([load], with_bids=False)
        model, vmap = build_proposed(case)
        mip = solve_mip(model)
        return compute_lmp(model, mip, vmap)

    details, ok = [], True
    for load, expected in ((100.0, 15.0), (600.0, 20.0)):
        p = fixed_objective(load)
        fd = (fixed_objective(load + 1.0).objective - fixed_objective(load - 1.0).objective) / 2.0
        ok &= close(p.lmp[0], expected) and close(fd, p.lmp[0])
        details.append(f"load {load:g}: lmp={p.lmp[0]:.6f} fd={fd:.6f} expected {expected:g}")
    worst = 0.0
    n = 0
    for builder in (build_proposed, build_legacy):
        model, vmap = builder(two_unit_case())
        prices = compute_lmp(model, solve_mip(model), vmap)
        worst = max(worst, abs(prices.objective - prices.dual_objective) / (1 + abs(prices.objective)))
        n += 1
    reports, _ = scenario_corpus()
    for _, rep in reports:
        for run in (rep.legacy, rep.proposed):
            worst = max(worst, abs(run.prices.objective - run.prices.dual_objective) / (1 + abs(run.prices.objective)))
            n += 1
    ok &= worst <= REL
    report("C5", "pricing checks", ok,
           "; ".join(details) + f"; strong duality on {n} fixed LPs, worst |p-d|/(1+|p|)={worst:.2e}")


def test_c6_compactness():
    rng = np.random.default_rng(6)
    bad, shapes = [], []
    for i in range(20):
        case = random_shape_case(rng)
        rep = compactness_report(build_proposed(case)[0], build_proposed(case, storage=False)[0], case)
        shapes.append((len(case.reservoirs), case.horizon.n_intervals))
        if not rep.formulas_hold:
            bad.append(i)
    report("C6", "compactness formulas", not bad,
           f"{20 - len(bad)}/20 random shapes exact (R*(T+1) SOC vars, 2*R*T plant vars, 2+2|G_r| nnz per row); "
           f"shapes (R,T)={shapes[:5]}...")


def test_c7_gap_contract():
    instances = [("two-unit proposed", build_proposed(two_unit_case())[0]),
                 ("two-unit legacy", build_legacy(two_unit_case())[0])]
    for i, c in enumerate(scenario_cases(two_unit_case(), 3, seed=99)):
        instances.append((f"scenario{i} legacy", build_legacy(c)[0]))
        instances.append((f"scenario{i} proposed", build_proposed(c)[0]))
    over = two_unit_case([2500.0] * 4, with_bids=False)
    instances.append(("infeasible", build_proposed(over)[0]))
    runs, bad = 0, []
    statuses = {}
    for name, model in instances:
        for gap in (DEFAULT_GAP, OPERATIONAL_GAP):
            sol = solve_mip(model, gap, node_limit=400)
            runs += 1
            statuses[sol.status.value] = statuses.get(sol.status.value, 0) + 1
            if sol.status in (MipStatus.OPTIMAL, MipStatus.GAP_REACHED):
                if not sol.gap <= gap:
                    bad.append(f"{name}@{gap:g}: gap {sol.gap}")
            elif sol.status not in (MipStatus.INFEASIBLE, MipStatus.NODE_LIMIT):
                bad.append(f"{name}@{gap:g}: status {sol.status}")
            if sol.has_incumbent and sol.best_bound > sol.objective + 1e-9 * max(1, abs(sol.objective)):
                bad.append(f"{name}@{gap:g}: bound {sol.best_bound} > objective {sol.objective}")
            h = sol.bound_history
            if any(b2 < b1 - 1e-9 * max(1.0, abs(b1)) for b1, b2 in zip(h, h[1:]) if math.isfinite(b1)):
                bad.append(f"{name}@{gap:g}: bound history decreases")
    report("C7", "MIP-gap contract", not bad,
           f"{runs} runs over rel_gap {{1e-6, 1e-2}}, statuses={statuses}, violations={bad[:3]}")


if __name__ == "__main__":  # pragma: no cover
    for fn in (test_c1_two_unit_reproduction, test_c2_oracle_equivalence, test_c3_objective_dominance,
               test_c4_constraint_invariants, test_c5_pricing, test_c6_compactness, test_c7_gap_contract):
        try:
            fn()
        except AssertionError:
            pass
