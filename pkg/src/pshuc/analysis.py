"""Benefit analysis (legacy vs proposed), compactness accounting and the enumeration oracle."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .formulation import (
    ObjectiveMode,
    Schedule,
    build_legacy,
    build_proposed,
    decode_schedule,
    thermal_cost,
)
from .milp import Milp
from .model import (
    ALL_TRANSITIONS,
    MODES,
    Case,
    Horizon,
    LegacyBid,
    Mode,
    PshUnit,
    Reservoir,
    ThermalUnit,
    ValidatedCase,
    as_case,
    validate_case,
    with_net_load,
)
from .pricing import PriceSeries, ProfitStatement, compute_lmp, psh_profit
from .solver import DEFAULT_GAP, LpStatus, SimplexEngine, SolverHandle, get_solver


class TooLarge(ValueError):
    """Enumeration would exceed the requested size guard."""


# ---------------------------------------------------------------- matched bounds


def derive_matched_bounds(case: Case | ValidatedCase, legacy_schedule: Schedule) -> Case:
    """Reservoir limits implied by a legacy clearing.

    End level is the legacy end level; the floor is the start minus all cleared
    generation through the turbine efficiency; the ceiling is the start plus all
    cleared pumping through the pump efficiency. Values are applied as derived,
    even when they fall outside the physical reservoir limits.
    """
    case = as_case(case)
    dt = legacy_schedule.dt_hours
    reservoirs = []
    for r in case.reservoirs:
        units = case.units_of(r.id)
        gen = dt * sum(sum(legacy_schedule.q_gen[g.id]) / g.eta_gen for g in units)
        pump = dt * sum(g.eta_pump * sum(legacy_schedule.q_pump[g.id]) for g in units)
        end = legacy_schedule.soc[r.id][-1]
        lo, hi = r.e_initial - gen, r.e_initial + pump
        # the end level lies in [lo, hi] exactly; guard against roundoff at the edges
        end = min(max(end, lo), hi)
        reservoirs.append(replace(r, e_min=lo, e_max=hi, e_final=end))
    return replace(case, reservoirs=tuple(reservoirs))


def matched_bound_flags(original: Case, derived: Case) -> list[str]:
    flags = []
    for r0, r1 in zip(original.reservoirs, derived.reservoirs):
        if r1.e_min < r0.e_min:
            flags.append(f"{r0.id}: derived e_min {r1.e_min:g} below physical floor {r0.e_min:g}")
        if r1.e_max > r0.e_max:
            flags.append(f"{r0.id}: derived e_max {r1.e_max:g} above physical ceiling {r0.e_max:g}")
    return flags


# ---------------------------------------------------------------- benefit report


@dataclass(frozen=True)
class ModelRun:
    tag: str
    schedule: Schedule
    prices: PriceSeries
    mip_objective: float
    thermal_objective: float
    status: str
    gap: float
    nodes: int


@dataclass(frozen=True)
class BenefitReport:
    legacy_objective: float
    proposed_objective: float
    objective_improvement_pct: float | None
    profits: dict[str, tuple[ProfitStatement, ProfitStatement]]
    profit_improvement_pct: dict[str, float | None]
    matched_soc_endpoints: dict[str, dict[str, float]]
    flags: list[str] = field(default_factory=list)
    legacy: ModelRun | None = None
    proposed: ModelRun | None = None

    @property
    def dominance_holds(self) -> bool:
        return self.proposed_objective <= self.legacy_objective + 1e-6 * abs(self.legacy_objective)


def _pct(old: float, new: float, *, lower_is_better: bool) -> float | None:
    if old == 0:
        return None
    diff = old - new if lower_is_better else new - old
    return diff / abs(old) * 100.0


def _run(case: Case, model: Milp, vmap, tag: str, solver: SolverHandle, rel_gap, node_limit) -> ModelRun:
    mip = solver.solve_mip(model, rel_gap, node_limit)
    mip.require_incumbent()
    schedule = decode_schedule(case, vmap, mip)
    prices = compute_lmp(model, mip, vmap, solver=solver)
    return ModelRun(
        tag, schedule, prices, mip.objective, thermal_cost(case, schedule), mip.status.value, mip.gap, mip.nodes_explored
    )


def compare_models(
    case: Case | ValidatedCase,
    rel_gap: float = DEFAULT_GAP,
    node_limit: int | None = None,
    solver: SolverHandle | None = None,
) -> BenefitReport:
    """Clear the legacy model, derive matched reservoir bounds, clear the proposed model, compare.

    Objectives are compared on thermal production cost; each run's PSH profits are
    settled at that run's own prices.
    """
    case = as_case(validate_case(case))
    solver = solver or get_solver()
    legacy_model, lmap = build_legacy(case)
    legacy = _run(case, legacy_model, lmap, "legacy", solver, rel_gap, node_limit)

    derived = derive_matched_bounds(case, legacy.schedule)
    flags = matched_bound_flags(case, derived)
    proposed_model, pmap = build_proposed(derived, ObjectiveMode.THERMAL_ONLY)
    flags += pmap.notes
    proposed = _run(derived, proposed_model, pmap, "proposed", solver, rel_gap, node_limit)

    profits, profit_pct = {}, {}
    for g in case.psh_units:
        old = psh_profit(legacy.schedule, legacy.prices, g.id)
        new = psh_profit(proposed.schedule, proposed.prices, g.id)
        profits[g.id] = (old, new)
        profit_pct[g.id] = _pct(old.profit, new.profit, lower_is_better=False)
    endpoints = {r.id: {"e_final": r.e_final, "e_min": r.e_min, "e_max": r.e_max} for r in derived.reservoirs}
    return BenefitReport(
        legacy_objective=legacy.thermal_objective,
        proposed_objective=proposed.thermal_objective,
        objective_improvement_pct=_pct(legacy.thermal_objective, proposed.thermal_objective, lower_is_better=True),
        profits=profits,
        profit_improvement_pct=profit_pct,
        matched_soc_endpoints=endpoints,
        flags=flags,
        legacy=legacy,
        proposed=proposed,
    )


# ---------------------------------------------------------------- enumeration oracle


def mode_sequences(unit: PshUnit, T: int):
    """Every length-``T`` mode sequence reachable from the unit's initial mode through feasible transitions."""
    allowed = set(unit.feasible_transitions)

    def rec(prev, depth):
        if depth == T:
            yield ()
            return
        for m in MODES:
            if m == prev or (prev, m) in allowed:
                for rest in rec(m, depth + 1):
                    yield (m,) + rest

    yield from rec(unit.initial_mode, 0)


def count_mode_sequences(unit: PshUnit, T: int) -> int:
    counts = {m: 1 if m == unit.initial_mode else 0 for m in MODES}
    allowed = set(unit.feasible_transitions)
    for _ in range(T):
        counts = {n: sum(c for m, c in counts.items() if m == n or (m, n) in allowed) for n in MODES}
    return sum(counts.values())


@dataclass(frozen=True)
class BruteForceResult:
    objective: float
    modes: dict[str, tuple[Mode, ...]] | None
    sequences_tried: int
    feasible: int


def brute_force_search(
    case: Case | ValidatedCase,
    max_dimension: int = 100_000,
    objective: ObjectiveMode = ObjectiveMode.THERMAL_ONLY,
    lp_backend: SolverHandle | None = None,
) -> BruteForceResult:
    """Enumerate every combination of unit mode sequences and solve the remaining LP for each.

    With ``lp_backend=None`` a single simplex engine is warm-started between
    combinations by changing commitment bounds; otherwise each fixed LP is built
    and sent to the given solver.
    """
    case = as_case(validate_case(case))
    T = case.horizon.n_intervals
    size = 1
    for g in case.psh_units:
        size *= count_mode_sequences(g, T)
        if size > max_dimension:
            raise TooLarge(f"more than {max_dimension} mode-sequence combinations")
    model, vmap = build_proposed(case, objective)
    a = model.arrays

    def assignment(combo):
        fixed = {}
        for g, seq in zip(case.psh_units, combo):
            prev = g.initial_mode
            for t, mode in enumerate(seq):
                for m in MODES:
                    fixed[vmap[("u", g.id, t, m)]] = 1.0 if m == mode else 0.0
                for m, n in g.feasible_transitions:
                    fixed[vmap[("v", g.id, t, m, n)]] = 1.0 if (m, n) == (prev, mode) else 0.0
                prev = mode
        return fixed

    engine = None
    if lp_backend is None:
        engine = SimplexEngine(a)
        engine.want_duals = False
        first = engine.solve()
        if first.status is LpStatus.INFEASIBLE:
            return BruteForceResult(math.inf, None, 0, 0)

    best, best_combo, tried, feasible = math.inf, None, 0, 0
    for combo in itertools.product(*(list(mode_sequences(g, T)) for g in case.psh_units)):
        tried += 1
        fixed = assignment(combo)
        if any(v > a.ub[j] or v < a.lb[j] for j, v in fixed.items()):
            continue
        if engine is not None:
            for j, v in fixed.items():
                engine.set_bounds(j, v, v)
            sol = engine.resolve()
        else:
            from .milp import fix_variables

            sol = lp_backend.solve_lp(fix_variables(model, fixed))
        if sol.status is not LpStatus.OPTIMAL:
            continue
        feasible += 1
        if sol.objective < best:
            best, best_combo = sol.objective, combo
    modes = None if best_combo is None else {g.id: seq for g, seq in zip(case.psh_units, best_combo)}
    return BruteForceResult(best, modes, tried, feasible)


def brute_force_uc(case: Case | ValidatedCase, max_dimension: int = 100_000, **kw) -> float:
    """Minimum objective over all mode sequences (``inf`` when none is feasible)."""
    return brute_force_search(case, max_dimension, **kw).objective


# ---------------------------------------------------------------- compactness


def _family(name: str) -> str:
    return name.split("[", 1)[0]


@dataclass(frozen=True)
class CompactnessReport:
    added_variables: int
    added_soc_variables: int
    added_plant_variables: int
    added_rows: dict[str, int]
    added_nonzeros: dict[str, int]
    soc_row_nonzeros: dict[str, int]
    expected: dict[str, object] | None = None
    formulas_hold: bool | None = None


def compactness_report(proposed: Milp, baseline: Milp, case: Case | ValidatedCase | None = None) -> CompactnessReport:
    """Size difference between a model with the reservoir families and the same model without.

    With ``case`` the counts are also checked against the closed-form
    R*(T+1) SOC variables, 2*R*T plant variables for exclusive reservoirs and
    2 + 2*|units on r| nonzeros per recursion row.
    """
    base_vars = {v.name for v in baseline.variables}
    added = [v for v in proposed.variables if v.name not in base_vars]
    base_rows = Counter(_family(r.name) for r in baseline.rows)
    base_nnz = Counter()
    for r in baseline.rows:
        base_nnz[_family(r.name)] += len(r.terms)
    rows, nnz = Counter(), Counter()
    for r in proposed.rows:
        rows[_family(r.name)] += 1
        nnz[_family(r.name)] += len(r.terms)
    added_rows = {k: rows[k] - base_rows.get(k, 0) for k in rows if rows[k] != base_rows.get(k, 0)}
    added_nnz = {k: nnz[k] - base_nnz.get(k, 0) for k in nnz if nnz[k] != base_nnz.get(k, 0)}
    soc_nnz = {r.name: len(r.terms) for r in proposed.rows if _family(r.name) == "soc"}
    n_soc = sum(1 for v in added if _family(v.name) == "e")
    n_ur = sum(1 for v in added if _family(v.name) == "ur")

    expected = holds = None
    if case is not None:
        case = as_case(case)
        R, T = len(case.reservoirs), case.horizon.n_intervals
        exclusive = sum(1 for r in case.reservoirs if r.plant_exclusive)
        per_row = {f"soc[{r.id},{t}]": 2 + 2 * len(case.units_of(r.id)) for r in case.reservoirs for t in range(T)}
        expected = {"soc_variables": R * (T + 1), "plant_variables": 2 * exclusive * T, "soc_row_nonzeros": per_row}
        holds = (
            n_soc == expected["soc_variables"]
            and n_ur == expected["plant_variables"]
            and soc_nnz == per_row
            and len(added) == n_soc + n_ur
        )
    return CompactnessReport(len(added), n_soc, n_ur, added_rows, added_nnz, soc_nnz, expected, holds)


# ---------------------------------------------------------------- generators


def random_net_load(
    rng: np.random.Generator,
    n_intervals: int = 24,
    *,
    base: float = 750.0,
    valley_depth: float = 500.0,
    n_peaks: int = 2,
    peak_height: float = 450.0,
    floor: float = 50.0,
    ceiling: float = 1300.0,
) -> tuple[float, ...]:
    """Smooth daily profile: a Gaussian valley in the early hours plus ``n_peaks`` Gaussian peaks.

    Values are rounded to whole MW to keep instances well conditioned.
    """
    t = np.arange(n_intervals, dtype=float)
    scale = n_intervals / 24.0
    load = np.full(n_intervals, base)
    centre = rng.uniform(2.0, 8.0) * scale
    width = rng.uniform(1.0, 2.5) * scale
    load -= valley_depth * rng.uniform(0.6, 1.0) * np.exp(-0.5 * ((t - centre) / width) ** 2)
    for _ in range(n_peaks):
        c = rng.uniform(10.0, 22.0) * scale
        w = rng.uniform(1.0, 3.0) * scale
        load += peak_height * rng.uniform(0.5, 1.0) * np.exp(-0.5 * ((t - c) / w) ** 2)
    load += rng.normal(0.0, 20.0, n_intervals)
    return tuple(float(x) for x in np.round(np.clip(load, floor, ceiling)))


def scenario_cases(case: Case, n: int, seed: int, **load_kw) -> list[Case]:
    rng = np.random.default_rng(seed)
    T = case.horizon.n_intervals
    return [with_net_load(case, random_net_load(rng, T, **load_kw)) for _ in range(n)]


def random_small_case(rng: np.random.Generator, max_intervals: int = 6) -> Case:
    """One PSH unit, three single-segment thermals, short horizon; sized for enumeration."""
    T = int(rng.integers(1, max_intervals + 1))
    dt = float(rng.choice([0.5, 1.0, 1.0]))
    eta_g, eta_p = (float(x) for x in rng.uniform(0.75, 0.95, 2))
    q_gen_max = float(rng.integers(5, 21) * 10)
    q_gen_min = float(rng.integers(0, int(q_gen_max // 10) + 1) * 10)
    q_pump_max = float(rng.integers(5, 21) * 10)
    q_pump_min = q_pump_max if rng.random() < 0.5 else float(rng.integers(1, int(q_pump_max // 10) + 1) * 10)
    transitions = ALL_TRANSITIONS
    if rng.random() < 0.3:
        transitions = ALL_TRANSITIONS - {(Mode.GEN, Mode.PUMP), (Mode.PUMP, Mode.GEN)}
    min_up = {Mode.PUMP: float(rng.integers(2, 4))} if rng.random() < 0.3 else None
    unit = PshUnit(
        "G1", "R1", q_gen_min, q_gen_max, q_pump_min, q_pump_max, eta_g, eta_p, transitions, min_up,
        Mode(rng.choice([m.value for m in MODES])),
    )
    e_min = float(rng.integers(0, 5) * 100)
    e_max = e_min + float(rng.integers(2, 12) * 100)
    e0 = float(np.round(rng.uniform(e_min, e_max)))
    e_final = float(np.round(rng.uniform(e_min, e_max))) if rng.random() < 0.5 else e0
    res = Reservoir("R1", e_min, e_max, e0, e_final)
    prices = sorted(float(p) for p in rng.integers(5, 60, 3))
    caps = [float(c) for c in rng.integers(2, 8, 3) * 100]
    thermals = tuple(ThermalUnit(f"TG{i + 1}", 0.0, c, ((p, c),)) for i, (p, c) in enumerate(zip(prices, caps)))
    load = tuple(float(x) for x in rng.integers(1, int(0.8 * sum(caps) // 10), T) * 10)
    bid = LegacyBid(
        "G1", tuple([float(rng.integers(10, 40))] * T), tuple([float(rng.integers(10, 40))] * T),
        frozenset(), frozenset(range(T)), q_gen_max * T * dt,
    )
    return Case((unit,), (res,), thermals, Horizon(T, load, dt), (bid,))


def random_shape_case(rng: np.random.Generator) -> Case:
    """Random numbers of reservoirs, units per reservoir and intervals, for counting checks."""
    R = int(rng.integers(1, 4))
    T = int(rng.integers(1, 30))
    units, reservoirs = [], []
    for r in range(R):
        rid = f"R{r + 1}"
        reservoirs.append(
            Reservoir(rid, 0.0, 1000.0, 500.0, 500.0,
                      pump_start_limit=int(rng.integers(1, 3)) if rng.random() < 0.5 else None,
                      plant_exclusive=bool(rng.random() < 0.5))
        )
        for k in range(int(rng.integers(1, 4))):
            units.append(PshUnit(f"{rid}_G{k + 1}", rid, 10.0, 100.0, 50.0, 50.0, 0.9, 0.85))
    thermals = (ThermalUnit("TG1", 0.0, 2000.0, ((20.0, 2000.0),)),)
    load = tuple(float(x) for x in rng.integers(100, 1000, T))
    return Case(tuple(units), tuple(reservoirs), thermals, Horizon(T, load))


def compact_summary(report: CompactnessReport) -> dict:
    """JSON-friendly view of a compactness report (per-row nonzeros collapsed to their distinct values)."""
    d = asdict(report)
    d["soc_row_nonzeros"] = sorted(set(report.soc_row_nonzeros.values()))
    if d["expected"] is not None:
        d["expected"]["soc_row_nonzeros"] = sorted(set(report.expected["soc_row_nonzeros"].values()))
    return d
