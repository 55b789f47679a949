"""Problem-instance types for pumped-storage unit commitment.

Units: power in MW, energy in MWh, prices in $/MWh, time in hours.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum


class Mode(str, Enum):
    """Operating configuration of a pumped-storage unit."""

    ALL_OFF = "alloff"
    GEN = "gen"
    PUMP = "pump"


MODES: tuple[Mode, ...] = (Mode.ALL_OFF, Mode.GEN, Mode.PUMP)

ALL_TRANSITIONS: frozenset[tuple[Mode, Mode]] = frozenset(
    (m, n) for m in MODES for n in MODES if m != n
)


@dataclass(frozen=True)
class PshUnit:
    id: str
    reservoir_id: str
    q_gen_min: float
    q_gen_max: float
    q_pump_min: float
    q_pump_max: float
    eta_gen: float
    eta_pump: float
    feasible_transitions: frozenset[tuple[Mode, Mode]] = ALL_TRANSITIONS
    min_up_hours: dict[Mode, float] | None = None
    initial_mode: Mode = Mode.ALL_OFF

    @property
    def block_loaded_pump(self) -> bool:
        return self.q_pump_min == self.q_pump_max


@dataclass(frozen=True)
class Reservoir:
    id: str
    e_min: float
    e_max: float
    e_initial: float
    e_final: float
    pump_start_limit: int | None = None
    plant_exclusive: bool = False


@dataclass(frozen=True)
class ThermalUnit:
    """Always-committed unit with a convex piecewise-linear cost.

    ``cost_segments`` holds ``(marginal_price, width)`` pairs stacked above ``q_min``.
    """

    id: str
    q_min: float
    q_max: float
    cost_segments: tuple[tuple[float, float], ...]

    def cost_rate(self, q: float) -> float:
        """$/h at output ``q`` (the ``q_min`` block is free)."""
        rest = q - self.q_min
        total = 0.0
        for price, width in self.cost_segments:
            take = min(max(rest, 0.0), width)
            total += price * take
            rest -= take
        return total

    def marginal_price(self, q: float) -> float:
        rest = q - self.q_min
        for price, width in self.cost_segments:
            if rest < width:
                return price
            rest -= width
        return self.cost_segments[-1][0] if self.cost_segments else 0.0


@dataclass(frozen=True)
class Horizon:
    n_intervals: int
    net_load: tuple[float, ...]
    dt_hours: float = 1.0


@dataclass(frozen=True)
class LegacyBid:
    """Owner-submitted bid/offer for the current-practice clearing model."""

    psh_id: str
    gen_offer_price: tuple[float, ...]
    pump_bid_price: tuple[float, ...]
    pump_window: frozenset[int]
    gen_window: frozenset[int]
    daily_max_gen: float


@dataclass(frozen=True)
class Case:
    psh_units: tuple[PshUnit, ...]
    reservoirs: tuple[Reservoir, ...]
    thermal_units: tuple[ThermalUnit, ...]
    horizon: Horizon
    legacy_bids: tuple[LegacyBid, ...] | None = None

    def reservoir(self, rid: str) -> Reservoir:
        for r in self.reservoirs:
            if r.id == rid:
                return r
        raise KeyError(rid)

    def units_of(self, rid: str) -> tuple[PshUnit, ...]:
        return tuple(g for g in self.psh_units if g.reservoir_id == rid)

    def bid_for(self, psh_id: str) -> LegacyBid | None:
        for b in self.legacy_bids or ():
            if b.psh_id == psh_id:
                return b
        return None


class CaseValidationError(ValueError):
    """Raised when a case violates one or more instance invariants."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(f"{v.field}: {v.message}" for v in violations))


class DuplicateId(CaseValidationError):
    pass


class DanglingReference(CaseValidationError):
    pass


class BoundViolation(CaseValidationError):
    pass


class EfficiencyOutOfRange(CaseValidationError):
    pass


@dataclass(frozen=True)
class Violation:
    kind: type[CaseValidationError]
    field: str
    message: str


@dataclass(frozen=True)
class ValidatedCase:
    """A case that passed :func:`validate_case`. Builders accept only these."""

    case: Case

    def __getattr__(self, name):
        if name == "case":
            raise AttributeError(name)
        return getattr(self.case, name)


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def find_violations(case: Case) -> list[Violation]:
    out: list[Violation] = []

    def bad(kind, fld, msg):
        out.append(Violation(kind, fld, msg))

    seen: dict[str, str] = {}
    groups = [
        ("psh_units", case.psh_units),
        ("reservoirs", case.reservoirs),
        ("thermal_units", case.thermal_units),
    ]
    for name, items in groups:
        for i, obj in enumerate(items):
            if obj.id in seen:
                bad(DuplicateId, f"{name}[{i}].id", f"id {obj.id!r} already used in {seen[obj.id]}")
            else:
                seen[obj.id] = name

    h = case.horizon
    if not isinstance(h.n_intervals, int) or h.n_intervals < 1:
        bad(BoundViolation, "horizon.n_intervals", "must be an integer >= 1")
    if not (_finite(h.dt_hours) and h.dt_hours > 0):
        bad(BoundViolation, "horizon.dt_hours", "must be > 0")
    if len(h.net_load) != h.n_intervals:
        bad(BoundViolation, "horizon.net_load", f"length {len(h.net_load)} != n_intervals {h.n_intervals}")
    if not all(_finite(d) for d in h.net_load):
        bad(BoundViolation, "horizon.net_load", "values must be finite")

    res_ids = {r.id for r in case.reservoirs}
    for i, g in enumerate(case.psh_units):
        p = f"psh_units[{i}]"
        if g.reservoir_id not in res_ids:
            bad(DanglingReference, f"{p}.reservoir_id", f"unknown reservoir {g.reservoir_id!r}")
        for fld in ("eta_gen", "eta_pump"):
            eta = getattr(g, fld)
            if not (_finite(eta) and 0 < eta <= 1):
                bad(EfficiencyOutOfRange, f"{p}.{fld}", f"{eta} not in (0, 1]")
        for lo, hi in (("q_gen_min", "q_gen_max"), ("q_pump_min", "q_pump_max")):
            a, b = getattr(g, lo), getattr(g, hi)
            if not (_finite(a) and _finite(b) and 0 <= a <= b):
                bad(BoundViolation, f"{p}.{lo}", f"need 0 <= {lo} <= {hi}, got {a}, {b}")
        for m, n in g.feasible_transitions:
            if m == n:
                bad(BoundViolation, f"{p}.feasible_transitions", f"self-transition {m.value}->{n.value}")
        for m, hours in (g.min_up_hours or {}).items():
            if not (_finite(hours) and hours >= 0):
                bad(BoundViolation, f"{p}.min_up_hours.{m.value}", "must be >= 0")

    for i, r in enumerate(case.reservoirs):
        p = f"reservoirs[{i}]"
        if not all(_finite(x) for x in (r.e_min, r.e_max, r.e_initial, r.e_final)):
            bad(BoundViolation, p, "energy levels must be finite")
            continue
        if not r.e_min <= r.e_initial <= r.e_max:
            bad(BoundViolation, f"{p}.e_initial", f"{r.e_initial} outside [{r.e_min}, {r.e_max}]")
        if not r.e_min <= r.e_final <= r.e_max:
            bad(BoundViolation, f"{p}.e_final", f"{r.e_final} outside [{r.e_min}, {r.e_max}]")
        if r.pump_start_limit is not None and not (
            isinstance(r.pump_start_limit, int) and r.pump_start_limit >= 1
        ):
            bad(BoundViolation, f"{p}.pump_start_limit", "must be a positive integer")

    for i, k in enumerate(case.thermal_units):
        p = f"thermal_units[{i}]"
        if not (_finite(k.q_min) and _finite(k.q_max) and 0 <= k.q_min <= k.q_max):
            bad(BoundViolation, f"{p}.q_min", f"need 0 <= q_min <= q_max, got {k.q_min}, {k.q_max}")
            continue
        prices = [s[0] for s in k.cost_segments]
        widths = [s[1] for s in k.cost_segments]
        if any(b < a for a, b in zip(prices, prices[1:])):
            bad(BoundViolation, f"{p}.cost_segments", "marginal prices must be non-decreasing")
        if any(w < 0 for w in widths):
            bad(BoundViolation, f"{p}.cost_segments", "segment widths must be >= 0")
        if not math.isclose(sum(widths), k.q_max - k.q_min, rel_tol=1e-9, abs_tol=1e-9):
            bad(BoundViolation, f"{p}.cost_segments", f"widths sum to {sum(widths)}, expected {k.q_max - k.q_min}")

    psh_ids = {g.id for g in case.psh_units}
    bid_seen: set[str] = set()
    T = h.n_intervals
    for i, b in enumerate(case.legacy_bids or ()):
        p = f"legacy_bids[{i}]"
        if b.psh_id not in psh_ids:
            bad(DanglingReference, f"{p}.psh_id", f"unknown PSH unit {b.psh_id!r}")
        if b.psh_id in bid_seen:
            bad(DuplicateId, f"{p}.psh_id", f"second bid for {b.psh_id!r}")
        bid_seen.add(b.psh_id)
        if b.pump_window & b.gen_window:
            bad(BoundViolation, f"{p}.pump_window", "pump and gen windows overlap")
        if any(not 0 <= t < T for t in b.pump_window | b.gen_window):
            bad(BoundViolation, f"{p}.pump_window", "window index outside horizon")
        if len(b.gen_offer_price) != T or len(b.pump_bid_price) != T:
            bad(BoundViolation, f"{p}.gen_offer_price", "price series length must equal n_intervals")
        if not (_finite(b.daily_max_gen) and b.daily_max_gen >= 0):
            bad(BoundViolation, f"{p}.daily_max_gen", "must be >= 0")
    return out


def validate_case(case: Case | ValidatedCase) -> ValidatedCase:
    """Check every instance invariant; raise the first violation's error kind with all violations attached."""
    if isinstance(case, ValidatedCase):
        return case
    violations = find_violations(case)
    if violations:
        raise violations[0].kind(violations)
    return ValidatedCase(case)


def as_case(case: Case | ValidatedCase) -> Case:
    return case.case if isinstance(case, ValidatedCase) else case


def with_net_load(case: Case, net_load) -> Case:
    net_load = tuple(float(d) for d in net_load)
    return replace(case, horizon=replace(case.horizon, n_intervals=len(net_load), net_load=net_load))


def two_unit_case(net_load=None, *, with_bids: bool = True) -> Case:
    """The illustrative two-PSHU system: units sharing one reservoir plus three thermals.

    Without ``net_load`` a 24-hour profile with a valley at hours 5-7 is used.
    The legacy bid puts unit A's pump window at hours 0-4, missing the valley.
    """
    if net_load is None:
        net_load = VALLEY_DAY
    T = len(net_load)
    units = tuple(
        PshUnit(
            id=uid,
            reservoir_id="R1",
            q_gen_min=100.0,
            q_gen_max=200.0,
            q_pump_min=200.0,
            q_pump_max=200.0,
            eta_gen=0.9,
            eta_pump=0.9,
        )
        for uid in ("PSH_A", "PSH_B")
    )
    reservoir = Reservoir(id="R1", e_min=1000.0, e_max=3500.0, e_initial=2600.0, e_final=2600.0)
    thermals = (
        ThermalUnit("TG1", 0.0, 600.0, ((30.0, 600.0),)),
        ThermalUnit("TG2", 0.0, 400.0, ((20.0, 400.0),)),
        ThermalUnit("TG3", 0.0, 500.0, ((15.0, 500.0),)),
    )
    bids = None
    if with_bids:
        pump_window = frozenset(range(0, min(5, T)))
        gen_window = frozenset(range(min(5, T), T))
        bids = (
            LegacyBid("PSH_A", (26.0,) * T, (24.0,) * T, pump_window, gen_window, 810.0),
            LegacyBid("PSH_B", (26.0,) * T, (24.0,) * T, frozenset(), gen_window, 810.0),
        )
    return Case(
        psh_units=units,
        reservoirs=(reservoir,),
        thermal_units=thermals,
        horizon=Horizon(n_intervals=T, net_load=tuple(float(d) for d in net_load)),
        legacy_bids=bids,
    )


# Valley at hours 5-7, evening peak 16-20 where the 30 $/MWh unit is marginal.
VALLEY_DAY: tuple[float, ...] = (
    600, 600, 600, 600, 600,
    100, 100, 300,
    650, 700, 750, 800, 850, 850, 900, 900,
    1200, 1250, 1300, 1250, 1200,
    1000, 950, 900,
)
