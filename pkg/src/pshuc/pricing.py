"""Interval prices from the cleared commitment, and PSH owner settlement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .formulation import Schedule, VariableMap
from .milp import Milp, fix_variables
from .solver import LpStatus, MipSolution, SolverHandle, get_solver


class FixedLpInfeasible(RuntimeError):
    """The LP with commitments fixed has no solution; the incumbent does not fit the model."""


class HorizonMismatch(ValueError):
    pass


@dataclass(frozen=True)
class PriceSeries:
    lmp: tuple[float, ...]
    objective: float
    dual_objective: float
    degenerate: bool = False

    def __len__(self):
        return len(self.lmp)


@dataclass(frozen=True)
class ProfitStatement:
    psh_id: str
    energy_revenue: float
    pumping_cost: float
    profit: float


def fixed_commitment_model(model: Milp, incumbent) -> Milp:
    x = np.asarray(incumbent, dtype=float)
    return fix_variables(model, {j: float(np.round(x[j])) for j in model.binary_indices})


def balance_rows(model: Milp) -> list[int]:
    rows = []
    t = 0
    while f"balance[{t}]" in model.row_index:
        rows.append(model.row_index[f"balance[{t}]"])
        t += 1
    return rows


def compute_lmp(model: Milp, mip: MipSolution | None, vmap: VariableMap | None = None,
                solver: SolverHandle | None = None) -> PriceSeries:
    """Fix binaries at the incumbent, re-solve the LP and read the energy-balance duals.

    ``vmap`` is accepted for symmetry with the builders; rows are located by name.
    """
    if model.binary_indices:
        if mip is None or mip.incumbent is None:
            raise ValueError("pricing needs a MIP incumbent")
        fixed = fixed_commitment_model(model, mip.incumbent)
    else:
        fixed = model
    lp = (solver or get_solver()).solve_lp(fixed)
    if lp.status is not LpStatus.OPTIMAL:
        raise FixedLpInfeasible(f"fixed-commitment LP is {lp.status.value}")
    lmp = tuple(float(lp.duals[i]) for i in balance_rows(model))
    return PriceSeries(lmp, lp.objective, lp.dual_objective, lp.degenerate)


def psh_profit(schedule: Schedule, prices: PriceSeries, psh_id: str) -> ProfitStatement:
    """Energy settlement of one PSH unit at the given prices (no O&M costs)."""
    if len(prices.lmp) != schedule.n_intervals:
        raise HorizonMismatch(f"{len(prices.lmp)} prices for {schedule.n_intervals} intervals")
    dt = schedule.dt_hours
    revenue = sum(p * q * dt for p, q in zip(prices.lmp, schedule.q_gen[psh_id]))
    cost = sum(p * q * dt for p, q in zip(prices.lmp, schedule.q_pump[psh_id]))
    return ProfitStatement(psh_id, revenue, cost, revenue - cost)
