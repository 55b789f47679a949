"""MILP builders for the configuration-based PSH model and the legacy bid model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .milp import Milp, ModelBuilder, Sense
from .model import (
    MODES,
    Case,
    Mode,
    PshUnit,
    Reservoir,
    ValidatedCase,
    as_case,
    validate_case,
)

BINARY_TOL = 1e-6


class ObjectiveMode(str, Enum):
    WITH_PSH_BIDS = "with_psh_bids"
    THERMAL_ONLY = "thermal_only"


class InfeasibleBoundsDetected(ValueError):
    pass


class MissingLegacyBid(ValueError):
    pass


class NonIntegralCommitment(ValueError):
    pass


@dataclass
class VariableMap:
    """Semantic key -> column index. Keys are tuples whose first item names the family:

    ``("u", g, t, mode)``, ``("v", g, t, m, n)``, ``("q_gen", g, t)``, ``("q_pump", g, t)``,
    ``("q", k, t, seg)``, ``("e", r, t)``, ``("ur", r, t, mode)``.
    """

    kind: str
    index: dict[tuple, int] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def __getitem__(self, key) -> int:
        return self.index[key]

    def get(self, key, default=None):
        return self.index.get(key, default)

    def __contains__(self, key) -> bool:
        return key in self.index

    def family(self, name: str) -> dict[tuple, int]:
        return {k: j for k, j in self.index.items() if k[0] == name}


@dataclass(frozen=True)
class Schedule:
    """Decoded dispatch. SOC lists have ``n_intervals + 1`` points, the rest ``n_intervals``."""

    model_kind: str
    dt_hours: float
    net_load: tuple[float, ...]
    modes: dict[str, tuple[Mode, ...]]
    q_gen: dict[str, tuple[float, ...]]
    q_pump: dict[str, tuple[float, ...]]
    soc: dict[str, tuple[float, ...]]
    thermal: dict[str, tuple[float, ...]]

    @property
    def n_intervals(self) -> int:
        return len(self.net_load)

    def psh_net(self) -> list[float]:
        T = self.n_intervals
        return [sum(self.q_gen[g][t] - self.q_pump[g][t] for g in self.q_gen) for t in range(T)]


def effective_pump_max(unit: PshUnit, res: Reservoir, dt: float) -> float:
    return min((res.e_max - res.e_min) / (unit.eta_pump * dt), unit.q_pump_max)


def effective_gen_max(unit: PshUnit, res: Reservoir, dt: float) -> float:
    return min((res.e_max - res.e_min) * unit.eta_gen / dt, unit.q_gen_max)


def _snap(lo: float, hi: float) -> float:
    # reservoir-derived maxima that miss the unit minimum by roundoff are treated as equal
    if lo - 1e-9 * max(1.0, abs(lo)) <= hi < lo:
        return lo
    return hi


def _mode_caps(unit: PshUnit, res: Reservoir, dt: float) -> tuple[float, float]:
    pump_hi = _snap(unit.q_pump_min, effective_pump_max(unit, res, dt))
    gen_hi = _snap(unit.q_gen_min, effective_gen_max(unit, res, dt))
    return pump_hi, gen_hi


def _add_thermal(b: ModelBuilder, case: Case, vmap: VariableMap) -> list[list[tuple[int, float]]]:
    """Segment variables for every thermal unit; returns balance-row terms per interval."""
    dt = case.horizon.dt_hours
    T = case.horizon.n_intervals
    terms: list[list[tuple[int, float]]] = [[] for _ in range(T)]
    for k in case.thermal_units:
        for t in range(T):
            for s, (price, width) in enumerate(k.cost_segments):
                j = b.add_var(f"q[{k.id},{t},{s}]", 0.0, width, cost=price * dt)
                vmap.index[("q", k.id, t, s)] = j
                terms[t].append((j, 1.0))
    return terms


def _add_balance(b: ModelBuilder, case: Case, terms, vmap: VariableMap) -> None:
    base = sum(k.q_min for k in case.thermal_units)
    for t in range(case.horizon.n_intervals):
        row = list(terms[t])
        for g in case.psh_units:
            if ("q_gen", g.id, t) in vmap:
                row.append((vmap[("q_gen", g.id, t)], 1.0))
            if ("q_pump", g.id, t) in vmap:
                row.append((vmap[("q_pump", g.id, t)], -1.0))
        b.add_row(f"balance[{t}]", row, Sense.EQ, case.horizon.net_load[t] - base)


def build_proposed(
    case: Case | ValidatedCase,
    objective: ObjectiveMode = ObjectiveMode.THERMAL_ONLY,
    *,
    storage: bool = True,
    strict: bool = False,
) -> tuple[Milp, VariableMap]:
    """Configuration-based model: mode commitments, transitions, box limits, SOC and plant rows.

    ``storage=False`` drops the reservoir families (SOC variables and rows, pump-start and
    plant-exclusivity rows) to give the baseline used for compactness accounting.
    When a mode's minimum output exceeds its reservoir-limited maximum the mode is
    disabled (commitment upper bound 0) and noted; ``strict=True`` raises instead.
    """
    case = as_case(validate_case(case))
    T, dt = case.horizon.n_intervals, case.horizon.dt_hours
    b = ModelBuilder(name="proposed")
    vmap = VariableMap("proposed")
    idx = vmap.index

    if objective is ObjectiveMode.WITH_PSH_BIDS:
        for g in case.psh_units:
            if case.bid_for(g.id) is None:
                raise MissingLegacyBid(g.id)

    thermal_terms = _add_thermal(b, case, vmap)

    for g in case.psh_units:
        res = case.reservoir(g.reservoir_id)
        pump_hi, gen_hi = _mode_caps(g, res, dt)
        disabled = set()
        for mode, lo, hi in ((Mode.PUMP, g.q_pump_min, pump_hi), (Mode.GEN, g.q_gen_min, gen_hi)):
            if lo > hi or hi <= 0:
                msg = f"{g.id}: {mode.value} minimum {lo} exceeds effective maximum {hi:.6g}"
                if strict:
                    raise InfeasibleBoundsDetected(msg)
                vmap.notes.append(msg + "; mode disabled")
                disabled.add(mode)
        bid = case.bid_for(g.id)
        for t in range(T):
            for m in MODES:
                idx[("u", g.id, t, m)] = b.add_binary(f"u[{g.id},{t},{m.value}]", upper=0.0 if m in disabled else 1.0)
            for m, n in sorted(g.feasible_transitions):
                idx[("v", g.id, t, m, n)] = b.add_binary(f"v[{g.id},{t},{m.value},{n.value}]")
            gen_cost = pump_cost = 0.0
            if objective is ObjectiveMode.WITH_PSH_BIDS:
                gen_cost = bid.gen_offer_price[t] * dt
                pump_cost = -bid.pump_bid_price[t] * dt
            idx[("q_gen", g.id, t)] = b.add_var(f"q_gen[{g.id},{t}]", 0.0, max(gen_hi, 0.0), cost=gen_cost)
            idx[("q_pump", g.id, t)] = b.add_var(f"q_pump[{g.id},{t}]", 0.0, max(pump_hi, 0.0), cost=pump_cost)

    _add_balance(b, case, thermal_terms, vmap)

    for g in case.psh_units:
        res = case.reservoir(g.reservoir_id)
        pump_hi, gen_hi = (max(v, 0.0) for v in _mode_caps(g, res, dt))
        trans = sorted(g.feasible_transitions)
        for t in range(T):
            b.add_row(f"exclusive[{g.id},{t}]", [(idx[("u", g.id, t, m)], 1.0) for m in MODES], Sense.EQ, 1.0)
        for t in range(T):
            for m in MODES:
                terms = [(idx[("u", g.id, t, m)], 1.0)]
                rhs = 0.0
                if t == 0:
                    rhs = 1.0 if g.initial_mode == m else 0.0
                else:
                    terms.append((idx[("u", g.id, t - 1, m)], -1.0))
                for a, c in trans:
                    if c == m:
                        terms.append((idx[("v", g.id, t, a, c)], -1.0))
                    if a == m:
                        terms.append((idx[("v", g.id, t, a, c)], 1.0))
                b.add_row(f"flow[{g.id},{t},{m.value}]", terms, Sense.EQ, rhs)
        for t in range(T):
            if trans:
                b.add_row(f"one_transition[{g.id},{t}]", [(idx[("v", g.id, t, a, c)], 1.0) for a, c in trans], Sense.LE, 1.0)
        for t in range(T):
            up, qp = idx[("u", g.id, t, Mode.PUMP)], idx[("q_pump", g.id, t)]
            ug, qg = idx[("u", g.id, t, Mode.GEN)], idx[("q_gen", g.id, t)]
            b.add_row(f"pump_min[{g.id},{t}]", [(qp, 1.0), (up, -g.q_pump_min)], Sense.GE, 0.0)
            b.add_row(f"pump_max[{g.id},{t}]", [(qp, 1.0), (up, -pump_hi)], Sense.LE, 0.0)
            b.add_row(f"gen_min[{g.id},{t}]", [(qg, 1.0), (ug, -g.q_gen_min)], Sense.GE, 0.0)
            b.add_row(f"gen_max[{g.id},{t}]", [(qg, 1.0), (ug, -gen_hi)], Sense.LE, 0.0)
        for m, hours in sorted((g.min_up_hours or {}).items()):
            L = math.ceil(hours / dt - 1e-9)
            if L <= 1:
                continue
            into = [a for a, c in trans if c == m]
            for t in range(T):
                terms = [(idx[("u", g.id, t, m)], 1.0)]
                for tau in range(max(0, t - L + 1), t + 1):
                    terms += [(idx[("v", g.id, tau, a, m)], -1.0) for a in into]
                b.add_row(f"min_up[{g.id},{t},{m.value}]", terms, Sense.GE, 0.0)

    if storage:
        for r in case.reservoirs:
            for t in range(T + 1):
                idx[("e", r.id, t)] = b.add_var(f"e[{r.id},{t}]", r.e_min, r.e_max)
            units = case.units_of(r.id)
            for t in range(T):
                terms = [(idx[("e", r.id, t + 1)], 1.0), (idx[("e", r.id, t)], -1.0)]
                for g in units:
                    terms.append((idx[("q_pump", g.id, t)], -dt * g.eta_pump))
                    terms.append((idx[("q_gen", g.id, t)], dt / g.eta_gen))
                b.add_row(f"soc[{r.id},{t}]", terms, Sense.EQ, 0.0)
            b.add_row(f"soc_initial[{r.id}]", [(idx[("e", r.id, 0)], 1.0)], Sense.EQ, r.e_initial)
            b.add_row(f"soc_final[{r.id}]", [(idx[("e", r.id, T)], 1.0)], Sense.EQ, r.e_final)
            if r.pump_start_limit is not None:
                for t in range(T):
                    terms = [
                        (idx[("v", g.id, t, a, c)], 1.0)
                        for g in units
                        for a, c in sorted(g.feasible_transitions)
                        if c == Mode.PUMP
                    ]
                    if terms:
                        b.add_row(f"pump_start[{r.id},{t}]", terms, Sense.LE, float(r.pump_start_limit))
            if r.plant_exclusive:
                for t in range(T):
                    for m in (Mode.GEN, Mode.PUMP):
                        idx[("ur", r.id, t, m)] = b.add_var(f"ur[{r.id},{t},{m.value}]", 0.0, 1.0)
                for t in range(T):
                    b.add_row(
                        f"plant_exclusive[{r.id},{t}]",
                        [(idx[("ur", r.id, t, Mode.PUMP)], 1.0), (idx[("ur", r.id, t, Mode.GEN)], 1.0)],
                        Sense.LE,
                        1.0,
                    )
                    for g in units:
                        for m in (Mode.GEN, Mode.PUMP):
                            b.add_row(
                                f"plant_link[{r.id},{g.id},{t},{m.value}]",
                                [(idx[("u", g.id, t, m)], 1.0), (idx[("ur", r.id, t, m)], -1.0)],
                                Sense.LE,
                                0.0,
                            )
    return b.build(), vmap


def build_legacy(case: Case | ValidatedCase) -> tuple[Milp, VariableMap]:
    """Current-practice clearing: owner windows, bid/offer prices, daily generation cap, no SOC."""
    case = as_case(validate_case(case))
    T, dt = case.horizon.n_intervals, case.horizon.dt_hours
    for g in case.psh_units:
        if case.bid_for(g.id) is None:
            raise MissingLegacyBid(g.id)
    b = ModelBuilder(name="legacy")
    vmap = VariableMap("legacy")
    idx = vmap.index
    thermal_terms = _add_thermal(b, case, vmap)
    for g in case.psh_units:
        bid = case.bid_for(g.id)
        for t in range(T):
            if t in bid.pump_window:
                idx[("u", g.id, t, Mode.PUMP)] = b.add_binary(f"u[{g.id},{t},pump]")
                idx[("q_pump", g.id, t)] = b.add_var(
                    f"q_pump[{g.id},{t}]", 0.0, g.q_pump_max, cost=-bid.pump_bid_price[t] * dt
                )
            if t in bid.gen_window:
                idx[("u", g.id, t, Mode.GEN)] = b.add_binary(f"u[{g.id},{t},gen]")
                idx[("q_gen", g.id, t)] = b.add_var(
                    f"q_gen[{g.id},{t}]", 0.0, g.q_gen_max, cost=bid.gen_offer_price[t] * dt
                )
    _add_balance(b, case, thermal_terms, vmap)
    for g in case.psh_units:
        bid = case.bid_for(g.id)
        for t in range(T):
            if t in bid.pump_window:
                up, qp = idx[("u", g.id, t, Mode.PUMP)], idx[("q_pump", g.id, t)]
                b.add_row(f"pump_min[{g.id},{t}]", [(qp, 1.0), (up, -g.q_pump_min)], Sense.GE, 0.0)
                b.add_row(f"pump_max[{g.id},{t}]", [(qp, 1.0), (up, -g.q_pump_max)], Sense.LE, 0.0)
            if t in bid.gen_window:
                ug, qg = idx[("u", g.id, t, Mode.GEN)], idx[("q_gen", g.id, t)]
                b.add_row(f"gen_min[{g.id},{t}]", [(qg, 1.0), (ug, -g.q_gen_min)], Sense.GE, 0.0)
                b.add_row(f"gen_max[{g.id},{t}]", [(qg, 1.0), (ug, -g.q_gen_max)], Sense.LE, 0.0)
        gen_terms = [(idx[("q_gen", g.id, t)], dt) for t in range(T) if ("q_gen", g.id, t) in idx]
        if gen_terms:
            b.add_row(f"daily_gen[{g.id}]", gen_terms, Sense.LE, bid.daily_max_gen)
    return b.build(), vmap


def decode_schedule(case: Case | ValidatedCase, vmap: VariableMap, solution) -> Schedule:
    """Read a solved model back into per-unit modes, powers, SOC trajectories and thermal outputs.

    ``solution`` may be a primal vector or any object with ``incumbent`` / ``primal``.
    """
    case = as_case(case)
    x = solution
    for attr in ("incumbent", "primal"):
        if hasattr(solution, attr):
            x = getattr(solution, attr)
            break
    x = np.asarray(x, dtype=float)
    T, dt = case.horizon.n_intervals, case.horizon.dt_hours
    idx = vmap.index

    def val(key):
        j = idx.get(key)
        if j is None:
            return 0.0
        # solver roundoff on inactive power variables
        return 0.0 if abs(x[j]) < 1e-9 else float(x[j])

    for key, j in idx.items():
        if key[0] in ("u", "v") and abs(x[j] - round(x[j])) > BINARY_TOL:
            raise NonIntegralCommitment(f"{key}: {x[j]}")

    modes, q_gen, q_pump = {}, {}, {}
    for g in case.psh_units:
        seq = []
        for t in range(T):
            if round(val(("u", g.id, t, Mode.PUMP))) == 1:
                seq.append(Mode.PUMP)
            elif round(val(("u", g.id, t, Mode.GEN))) == 1:
                seq.append(Mode.GEN)
            else:
                seq.append(Mode.ALL_OFF)
        modes[g.id] = tuple(seq)
        q_gen[g.id] = tuple(val(("q_gen", g.id, t)) for t in range(T))
        q_pump[g.id] = tuple(val(("q_pump", g.id, t)) for t in range(T))

    soc = {}
    for r in case.reservoirs:
        if ("e", r.id, 0) in idx:
            soc[r.id] = tuple(val(("e", r.id, t)) for t in range(T + 1))
        else:
            level = [r.e_initial]
            for t in range(T):
                delta = sum(
                    g.eta_pump * q_pump[g.id][t] - q_gen[g.id][t] / g.eta_gen for g in case.units_of(r.id)
                )
                level.append(level[-1] + dt * delta)
            soc[r.id] = tuple(level)

    thermal = {
        k.id: tuple(
            k.q_min + sum(val(("q", k.id, t, s)) for s in range(len(k.cost_segments))) for t in range(T)
        )
        for k in case.thermal_units
    }
    return Schedule(vmap.kind, dt, tuple(case.horizon.net_load), modes, q_gen, q_pump, soc, thermal)


def thermal_cost(case: Case | ValidatedCase, schedule: Schedule) -> float:
    """Thermal production cost of a schedule, $ (the common comparison basis)."""
    case = as_case(case)
    dt = case.horizon.dt_hours
    return sum(
        dt * k.cost_rate(q) for k in case.thermal_units for q in schedule.thermal[k.id]
    )
