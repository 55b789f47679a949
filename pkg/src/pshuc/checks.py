"""Independent feasibility checks on solved schedules.

These recompute every physical rule from the case data and a decoded
schedule (plus the raw commitment vector when available) without going
through the constraint rows that produced the solution.
"""

from __future__ import annotations

import numpy as np

from .formulation import Schedule, VariableMap, effective_gen_max, effective_pump_max
from .model import MODES, Case, Mode, ValidatedCase, as_case

TOL = 1e-6


def commitment_violations(case: Case | ValidatedCase, vmap: VariableMap, x, tol: float = TOL) -> list[str]:
    """Exclusivity, transition flow and single-transition rules on the raw binaries of a proposed-model point."""
    case = as_case(case)
    x = np.asarray(getattr(x, "incumbent", x), dtype=float)
    T = case.horizon.n_intervals
    out = []
    for g in case.psh_units:
        trans = sorted(g.feasible_transitions)
        for t in range(T):
            u = {m: x[vmap[("u", g.id, t, m)]] for m in MODES}
            v = {(a, c): x[vmap[("v", g.id, t, a, c)]] for a, c in trans}
            if abs(sum(u.values()) - 1.0) > tol:
                out.append(f"exclusive {g.id} t={t}: sum u = {sum(u.values())}")
            if sum(v.values()) > 1.0 + tol:
                out.append(f"one_transition {g.id} t={t}: sum v = {sum(v.values())}")
            for m in MODES:
                prev = (1.0 if g.initial_mode == m else 0.0) if t == 0 else x[vmap[("u", g.id, t - 1, m)]]
                flow = sum(val for (a, c), val in v.items() if c == m) - sum(val for (a, c), val in v.items() if a == m)
                if abs(u[m] - prev - flow) > tol:
                    out.append(f"flow {g.id} t={t} {m.value}: residual {u[m] - prev - flow}")
    return out


def schedule_violations(case: Case | ValidatedCase, schedule: Schedule, tol: float = TOL) -> list[str]:
    """Every rule a cleared schedule must satisfy, checked from first principles.

    Storage rules apply to proposed-model schedules; legacy schedules are checked
    against their windows and daily cap instead.
    """
    case = as_case(case)
    T, dt = case.horizon.n_intervals, case.horizon.dt_hours
    out = []
    legacy = schedule.model_kind == "legacy"
    if schedule.n_intervals != T:
        return [f"horizon: schedule has {schedule.n_intervals} intervals, case has {T}"]

    for t in range(T):
        supply = sum(schedule.thermal[k.id][t] for k in case.thermal_units)
        supply += sum(schedule.q_gen[g.id][t] - schedule.q_pump[g.id][t] for g in case.psh_units)
        if abs(supply - case.horizon.net_load[t]) > tol:
            out.append(f"balance t={t}: residual {supply - case.horizon.net_load[t]}")
        for k in case.thermal_units:
            q = schedule.thermal[k.id][t]
            if q < k.q_min - tol or q > k.q_max + tol:
                out.append(f"thermal {k.id} t={t}: {q} outside [{k.q_min}, {k.q_max}]")

    for g in case.psh_units:
        res = case.reservoir(g.reservoir_id)
        modes = schedule.modes[g.id]
        if legacy:
            pump_hi, gen_hi = g.q_pump_max, g.q_gen_max
        else:
            pump_hi = effective_pump_max(g, res, dt)
            gen_hi = effective_gen_max(g, res, dt)
        for t in range(T):
            qg, qp = schedule.q_gen[g.id][t], schedule.q_pump[g.id][t]
            m = modes[t]
            if m is Mode.PUMP:
                if qp < g.q_pump_min - tol or qp > pump_hi + tol:
                    out.append(f"pump box {g.id} t={t}: {qp}")
            elif qp > tol:
                out.append(f"pump power without pump mode {g.id} t={t}: {qp}")
            if m is Mode.GEN:
                if qg < g.q_gen_min - tol or qg > gen_hi + tol:
                    out.append(f"gen box {g.id} t={t}: {qg}")
            elif qg > tol:
                out.append(f"gen power without gen mode {g.id} t={t}: {qg}")
        if legacy:
            bid = case.bid_for(g.id)
            for t in range(T):
                if modes[t] is Mode.PUMP and t not in bid.pump_window:
                    out.append(f"pump outside window {g.id} t={t}")
                if modes[t] is Mode.GEN and t not in bid.gen_window:
                    out.append(f"gen outside window {g.id} t={t}")
            total = dt * sum(schedule.q_gen[g.id])
            if total > bid.daily_max_gen + tol:
                out.append(f"daily generation {g.id}: {total} > {bid.daily_max_gen}")
            continue
        prev = g.initial_mode
        for t, m in enumerate(modes):
            if m != prev and (prev, m) not in g.feasible_transitions:
                out.append(f"infeasible transition {g.id} t={t}: {prev.value}->{m.value}")
            prev = m
        for m, hours in (g.min_up_hours or {}).items():
            L = int(np.ceil(hours / dt - 1e-9))
            seq = [g.initial_mode] + list(modes)
            t = 1
            while t <= T:
                if seq[t] == m and seq[t - 1] != m:
                    run = 1
                    while t + run <= T and seq[t + run] == m:
                        run += 1
                    if run < L and t + run <= T:
                        out.append(f"min up {g.id} {m.value} from t={t - 1}: {run} < {L}")
                    t += run
                else:
                    t += 1

    if legacy:
        return out

    for r in case.reservoirs:
        units = case.units_of(r.id)
        soc = schedule.soc[r.id]
        if abs(soc[0] - r.e_initial) > tol:
            out.append(f"soc initial {r.id}: {soc[0]} != {r.e_initial}")
        if abs(soc[-1] - r.e_final) > tol:
            out.append(f"soc final {r.id}: {soc[-1]} != {r.e_final}")
        net = 0.0
        for t in range(T):
            delta = dt * sum(g.eta_pump * schedule.q_pump[g.id][t] - schedule.q_gen[g.id][t] / g.eta_gen for g in units)
            net += delta
            if abs(soc[t + 1] - soc[t] - delta) > tol:
                out.append(f"soc recursion {r.id} t={t}: residual {soc[t + 1] - soc[t] - delta}")
        for t, e in enumerate(soc):
            if e < r.e_min - tol or e > r.e_max + tol:
                out.append(f"soc bound {r.id} t={t}: {e} outside [{r.e_min}, {r.e_max}]")
        if abs((r.e_final - r.e_initial) - net) > tol * max(1.0, T):
            out.append(f"soc telescoping {r.id}: {r.e_final - r.e_initial} vs {net}")
        for t in range(T):
            ms = [schedule.modes[g.id][t] for g in units]
            if r.plant_exclusive and Mode.PUMP in ms and Mode.GEN in ms:
                out.append(f"plant exclusivity {r.id} t={t}: pump and gen together")
            if r.pump_start_limit is not None:
                starts = 0
                for g in units:
                    before = g.initial_mode if t == 0 else schedule.modes[g.id][t - 1]
                    starts += before != Mode.PUMP and schedule.modes[g.id][t] == Mode.PUMP
                if starts > r.pump_start_limit:
                    out.append(f"pump starts {r.id} t={t}: {starts} > {r.pump_start_limit}")
    return out
