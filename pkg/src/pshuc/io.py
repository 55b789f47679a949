"""Case files, results files and plot-data CSV.

Case and results documents are JSON. Field names carry their units:
``_mw`` for power, ``_mwh`` for energy, ``_per_mwh`` for prices in $/MWh,
``_hours`` for durations.
"""

from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path

import jsonschema

from .analysis import BenefitReport
from .formulation import Schedule
from .model import (
    ALL_TRANSITIONS,
    Case,
    Horizon,
    LegacyBid,
    Mode,
    PshUnit,
    Reservoir,
    ThermalUnit,
    validate_case,
)
from .pricing import PriceSeries

CASE_VERSION = 1
RESULTS_VERSION = 1


class ParseError(ValueError):
    """File is empty or not valid JSON."""


class SchemaViolation(ValueError):
    """Document does not match the schema; ``field`` is a dotted path to the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class IoError(OSError):
    pass


_num = {"type": "number"}
_nonneg = {"type": "number", "minimum": 0}
_id = {"type": "string", "minLength": 1}
_mode = {"enum": [m.value for m in Mode]}


def _obj(props: dict, required: list[str]) -> dict:
    return {"type": "object", "properties": props, "required": required, "additionalProperties": False}


CASE_SCHEMA = _obj(
    {
        "version": {"const": CASE_VERSION},
        "horizon": _obj(
            {
                "n_intervals": {"type": "integer", "minimum": 1},
                "dt_hours": {"type": "number", "exclusiveMinimum": 0},
                "net_load_mw": {"type": "array", "items": _num, "minItems": 1},
            },
            ["n_intervals", "net_load_mw"],
        ),
        "psh_units": {
            "type": "array",
            "items": _obj(
                {
                    "id": _id,
                    "reservoir_id": _id,
                    "q_gen_min_mw": _nonneg,
                    "q_gen_max_mw": _nonneg,
                    "q_pump_min_mw": _nonneg,
                    "q_pump_max_mw": _nonneg,
                    "eta_gen": _num,
                    "eta_pump": _num,
                    "feasible_transitions": {
                        "type": "array",
                        "items": {"type": "array", "items": _mode, "minItems": 2, "maxItems": 2},
                    },
                    "min_up_hours": {
                        "type": "object",
                        "propertyNames": _mode,
                        "additionalProperties": _nonneg,
                    },
                    "initial_mode": _mode,
                },
                ["id", "reservoir_id", "q_gen_min_mw", "q_gen_max_mw", "q_pump_min_mw", "q_pump_max_mw",
                 "eta_gen", "eta_pump"],
            ),
        },
        "reservoirs": {
            "type": "array",
            "items": _obj(
                {
                    "id": _id,
                    "e_min_mwh": _num,
                    "e_max_mwh": _num,
                    "e_initial_mwh": _num,
                    "e_final_mwh": _num,
                    "pump_start_limit": {"type": ["integer", "null"], "minimum": 1},
                    "plant_exclusive": {"type": "boolean"},
                },
                ["id", "e_min_mwh", "e_max_mwh", "e_initial_mwh", "e_final_mwh"],
            ),
        },
        "thermal_units": {
            "type": "array",
            "items": _obj(
                {
                    "id": _id,
                    "q_min_mw": _nonneg,
                    "q_max_mw": _nonneg,
                    "cost_segments": {
                        "type": "array",
                        "items": _obj({"price_per_mwh": _num, "width_mw": _nonneg}, ["price_per_mwh", "width_mw"]),
                    },
                },
                ["id", "q_min_mw", "q_max_mw", "cost_segments"],
            ),
        },
        "legacy_bids": {
            "type": ["array", "null"],
            "items": _obj(
                {
                    "psh_id": _id,
                    "gen_offer_price_per_mwh": {"type": "array", "items": _num},
                    "pump_bid_price_per_mwh": {"type": "array", "items": _num},
                    "pump_window": {"type": "array", "items": {"type": "integer", "minimum": 0}, "uniqueItems": True},
                    "gen_window": {"type": "array", "items": {"type": "integer", "minimum": 0}, "uniqueItems": True},
                    "daily_max_gen_mwh": _nonneg,
                },
                ["psh_id", "gen_offer_price_per_mwh", "pump_bid_price_per_mwh", "pump_window", "gen_window",
                 "daily_max_gen_mwh"],
            ),
        },
    },
    ["version", "horizon", "psh_units", "reservoirs", "thermal_units"],
)


def _field_path(path) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def _parse_json(text: str, source: str):
    if not text.strip():
        raise ParseError(f"{source}: file is empty")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def case_to_dict(case: Case) -> dict:
    def transitions(g):
        if g.feasible_transitions == ALL_TRANSITIONS:
            return {}
        return {"feasible_transitions": sorted([m.value, n.value] for m, n in g.feasible_transitions)}

    doc = {
        "version": CASE_VERSION,
        "horizon": {
            "n_intervals": case.horizon.n_intervals,
            "dt_hours": case.horizon.dt_hours,
            "net_load_mw": list(case.horizon.net_load),
        },
        "psh_units": [
            {
                "id": g.id,
                "reservoir_id": g.reservoir_id,
                "q_gen_min_mw": g.q_gen_min,
                "q_gen_max_mw": g.q_gen_max,
                "q_pump_min_mw": g.q_pump_min,
                "q_pump_max_mw": g.q_pump_max,
                "eta_gen": g.eta_gen,
                "eta_pump": g.eta_pump,
                **transitions(g),
                **({"min_up_hours": {m.value: h for m, h in g.min_up_hours.items()}} if g.min_up_hours else {}),
                "initial_mode": g.initial_mode.value,
            }
            for g in case.psh_units
        ],
        "reservoirs": [
            {
                "id": r.id,
                "e_min_mwh": r.e_min,
                "e_max_mwh": r.e_max,
                "e_initial_mwh": r.e_initial,
                "e_final_mwh": r.e_final,
                "pump_start_limit": r.pump_start_limit,
                "plant_exclusive": r.plant_exclusive,
            }
            for r in case.reservoirs
        ],
        "thermal_units": [
            {
                "id": k.id,
                "q_min_mw": k.q_min,
                "q_max_mw": k.q_max,
                "cost_segments": [{"price_per_mwh": p, "width_mw": w} for p, w in k.cost_segments],
            }
            for k in case.thermal_units
        ],
        "legacy_bids": None
        if case.legacy_bids is None
        else [
            {
                "psh_id": b.psh_id,
                "gen_offer_price_per_mwh": list(b.gen_offer_price),
                "pump_bid_price_per_mwh": list(b.pump_bid_price),
                "pump_window": sorted(b.pump_window),
                "gen_window": sorted(b.gen_window),
                "daily_max_gen_mwh": b.daily_max_gen,
            }
            for b in case.legacy_bids
        ],
    }
    return doc


def case_from_dict(doc) -> Case:
    """Schema-check ``doc``, build the case and run the instance invariants."""
    validator = jsonschema.Draft202012Validator(CASE_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = max(errors, key=lambda e: len(e.absolute_path))
        raise SchemaViolation(_field_path(err.absolute_path), err.message)
    h = doc["horizon"]
    f = float
    units = tuple(
        PshUnit(
            id=u["id"],
            reservoir_id=u["reservoir_id"],
            q_gen_min=f(u["q_gen_min_mw"]),
            q_gen_max=f(u["q_gen_max_mw"]),
            q_pump_min=f(u["q_pump_min_mw"]),
            q_pump_max=f(u["q_pump_max_mw"]),
            eta_gen=f(u["eta_gen"]),
            eta_pump=f(u["eta_pump"]),
            feasible_transitions=frozenset((Mode(a), Mode(b)) for a, b in u["feasible_transitions"])
            if "feasible_transitions" in u
            else ALL_TRANSITIONS,
            min_up_hours={Mode(m): f(v) for m, v in u["min_up_hours"].items()} if u.get("min_up_hours") else None,
            initial_mode=Mode(u.get("initial_mode", Mode.ALL_OFF.value)),
        )
        for u in doc["psh_units"]
    )
    reservoirs = tuple(
        Reservoir(
            id=r["id"],
            e_min=f(r["e_min_mwh"]),
            e_max=f(r["e_max_mwh"]),
            e_initial=f(r["e_initial_mwh"]),
            e_final=f(r["e_final_mwh"]),
            pump_start_limit=r.get("pump_start_limit"),
            plant_exclusive=bool(r.get("plant_exclusive", False)),
        )
        for r in doc["reservoirs"]
    )
    thermals = tuple(
        ThermalUnit(
            k["id"], f(k["q_min_mw"]), f(k["q_max_mw"]),
            tuple((f(s["price_per_mwh"]), f(s["width_mw"])) for s in k["cost_segments"]),
        )
        for k in doc["thermal_units"]
    )
    bids = doc.get("legacy_bids")
    if bids is not None:
        bids = tuple(
            LegacyBid(
                b["psh_id"],
                tuple(f(x) for x in b["gen_offer_price_per_mwh"]),
                tuple(f(x) for x in b["pump_bid_price_per_mwh"]),
                frozenset(b["pump_window"]),
                frozenset(b["gen_window"]),
                f(b["daily_max_gen_mwh"]),
            )
            for b in bids
        )
    case = Case(
        units, reservoirs, thermals,
        Horizon(h["n_intervals"], tuple(f(x) for x in h["net_load_mw"]), f(h.get("dt_hours", 1.0))),
        bids,
    )
    validate_case(case)
    return case


def load_case(path) -> Case:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return case_from_dict(_parse_json(text, str(path)))


def save_case(case: Case, path) -> None:
    _write_json(case_to_dict(case), path)


def bundled_case_path(name: str = "two_unit.json") -> Path:
    return Path(str(resources.files("pshuc") / "data" / name))


def load_bundled_case(name: str = "two_unit.json") -> Case:
    return load_case(bundled_case_path(name))


def _write_json(doc, path) -> None:
    try:
        Path(path).write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------- results


def _clean(x: float):
    return None if not math.isfinite(x) else float(x)


def run_to_dict(tag: str, schedule: Schedule, prices: PriceSeries | None, solver_meta: dict | None = None) -> dict:
    T = schedule.n_intervals
    return {
        "model_tag": tag,
        "dt_hours": schedule.dt_hours,
        "net_load_mw": list(schedule.net_load),
        "solver": {k: (_clean(v) if isinstance(v, float) else v) for k, v in (solver_meta or {}).items()},
        "schedule": [
            {
                "interval": t,
                "unit": g,
                "mode": schedule.modes[g][t].value,
                "q_gen_mw": schedule.q_gen[g][t],
                "q_pump_mw": schedule.q_pump[g][t],
            }
            for g in schedule.modes
            for t in range(T)
        ],
        "soc": [{"interval": t, "reservoir": r, "e_mwh": e} for r, levels in schedule.soc.items() for t, e in enumerate(levels)],
        "thermal": [{"interval": t, "unit": k, "q_mw": q} for k, qs in schedule.thermal.items() for t, q in enumerate(qs)],
        "prices": [] if prices is None else [{"interval": t, "lmp": p} for t, p in enumerate(prices.lmp)],
        "prices_degenerate": None if prices is None else prices.degenerate,
    }


def schedule_from_run(run: dict) -> Schedule:
    """Inverse of the schedule part of :func:`run_to_dict`."""
    T = len(run["net_load_mw"])
    modes, q_gen, q_pump = {}, {}, {}
    for row in run["schedule"]:
        g = row["unit"]
        modes.setdefault(g, [None] * T)[row["interval"]] = Mode(row["mode"])
        q_gen.setdefault(g, [0.0] * T)[row["interval"]] = row["q_gen_mw"]
        q_pump.setdefault(g, [0.0] * T)[row["interval"]] = row["q_pump_mw"]
    soc: dict[str, list[float]] = {}
    for row in run["soc"]:
        soc.setdefault(row["reservoir"], [0.0] * (T + 1))[row["interval"]] = row["e_mwh"]
    thermal: dict[str, list[float]] = {}
    for row in run["thermal"]:
        thermal.setdefault(row["unit"], [0.0] * T)[row["interval"]] = row["q_mw"]
    tup = lambda d: {k: tuple(v) for k, v in d.items()}  # noqa: E731
    return Schedule(
        run["model_tag"], run["dt_hours"], tuple(run["net_load_mw"]),
        tup(modes), tup(q_gen), tup(q_pump), tup(soc), tup(thermal),
    )


def benefit_to_dict(report: BenefitReport) -> dict:
    return {
        "legacy_objective": report.legacy_objective,
        "proposed_objective": report.proposed_objective,
        "objective_improvement_pct": report.objective_improvement_pct,
        "dominance_holds": report.dominance_holds,
        "profits": {
            g: {
                "legacy": {"revenue": a.energy_revenue, "pumping_cost": a.pumping_cost, "profit": a.profit},
                "proposed": {"revenue": b.energy_revenue, "pumping_cost": b.pumping_cost, "profit": b.profit},
                "improvement_pct": report.profit_improvement_pct[g],
            }
            for g, (a, b) in report.profits.items()
        },
        "matched_soc_endpoints": report.matched_soc_endpoints,
        "flags": list(report.flags),
    }


def results_document(runs: list[dict], benefit: BenefitReport | dict | None = None) -> dict:
    if isinstance(benefit, BenefitReport):
        benefit = benefit_to_dict(benefit)
    return {"version": RESULTS_VERSION, "runs": runs, "benefit": benefit}


def benefit_results(report: BenefitReport) -> dict:
    runs = []
    for run in (report.legacy, report.proposed):
        meta = {"objective": run.mip_objective, "thermal_cost": run.thermal_objective, "gap": run.gap,
                "nodes": run.nodes, "status": run.status}
        runs.append(run_to_dict(run.tag, run.schedule, run.prices, meta))
    return results_document(runs, report)


def save_results(doc: dict, path) -> None:
    _write_json(doc, path)


def load_results(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    doc = _parse_json(text, str(path))
    if not isinstance(doc, dict) or doc.get("version") != RESULTS_VERSION or not isinstance(doc.get("runs"), list):
        raise SchemaViolation("version", f"expected a results document with version {RESULTS_VERSION}")
    return doc


PLOT_COLUMNS = ("t", "net_load_mw", "psh_net_mw", "lmp", "soc_mwh", "model_tag")


def plot_rows(results: dict) -> list[dict]:
    """One row per interval per run; SOC is the end-of-interval level summed over reservoirs."""
    rows = []
    for run in results["runs"]:
        sched = schedule_from_run(run)
        net = sched.psh_net()
        lmp = {p["interval"]: p["lmp"] for p in run.get("prices", [])}
        for t in range(sched.n_intervals):
            rows.append(
                {
                    "t": t,
                    "net_load_mw": sched.net_load[t],
                    "psh_net_mw": net[t],
                    "lmp": lmp.get(t, ""),
                    "soc_mwh": sum(levels[t + 1] for levels in sched.soc.values()) if sched.soc else "",
                    "model_tag": run["model_tag"],
                }
            )
    return rows


def emit_plot_data(results: dict, path) -> None:
    rows = plot_rows(results)
    if not rows:
        raise IoError("results contain no intervals; nothing to write")
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=PLOT_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
