"""Pluggable solver routing.

The built-in simplex / branch-and-bound pair is the default. Other backends
register through :func:`register_backend`; every result they return is
checked against the model before it is handed back.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from ..milp import Milp
from .bnb import DEFAULT_GAP, MipSolution, MipStatus, relative_gap, solve_mip
from .simplex import LpSolution, LpStatus, dual_objective, solve_lp

ENV_VAR = "PSH_SOLVER_BACKEND"
ROW_TOL = 1e-6


class BackendUnavailable(RuntimeError):
    pass


class SolverBackend(Protocol):
    name: str

    def solve_lp(self, model: Milp) -> LpSolution: ...

    def solve_mip(self, model: Milp, rel_gap: float, node_limit: int | None) -> MipSolution: ...


class BuiltinBackend:
    name = "builtin"

    def solve_lp(self, model: Milp) -> LpSolution:
        return solve_lp(model)

    def solve_mip(self, model: Milp, rel_gap: float = DEFAULT_GAP, node_limit: int | None = None) -> MipSolution:
        return solve_mip(model, rel_gap, node_limit)


class HighsBackend:
    """HiGHS through ``scipy.optimize``."""

    name = "highs"

    def __init__(self):
        try:
            from scipy.optimize import linprog, milp  # noqa: F401
        except ImportError as exc:  # pragma: no cover
            raise BackendUnavailable("scipy.optimize with HiGHS is not installed") from exc

    def solve_lp(self, model: Milp) -> LpSolution:
        from scipy.optimize import linprog

        a = model.arrays
        A = a.A.tocsr()
        eq = np.flatnonzero(a.row_lo == a.row_hi)
        hi = np.flatnonzero((a.row_lo != a.row_hi) & np.isfinite(a.row_hi))
        lo = np.flatnonzero((a.row_lo != a.row_hi) & np.isfinite(a.row_lo))
        import scipy.sparse as sp

        A_ub = sp.vstack([A[hi], -A[lo]]) if len(hi) + len(lo) else None
        b_ub = np.concatenate([a.row_hi[hi], -a.row_lo[lo]]) if A_ub is not None else None
        res = linprog(
            a.c,
            A_ub=A_ub,
            b_ub=b_ub,
            A_eq=A[eq] if len(eq) else None,
            b_eq=a.row_hi[eq] if len(eq) else None,
            bounds=np.column_stack([a.lb, a.ub]),
            method="highs",
        )
        n, m = len(a.c), len(a.row_lo)
        if res.status == 2:
            return LpSolution(LpStatus.INFEASIBLE, np.zeros(n), np.zeros(m), np.zeros(n), math.inf)
        if res.status == 3:
            return LpSolution(LpStatus.UNBOUNDED, np.zeros(n), np.zeros(m), np.zeros(n), -math.inf)
        if res.status != 0:
            raise BackendUnavailable(f"HiGHS LP returned status {res.status}: {res.message}")
        y = np.zeros(m)
        if len(eq):
            y[eq] = res.eqlin.marginals
        if A_ub is not None:
            marg = res.ineqlin.marginals
            y[hi] += marg[: len(hi)]
            y[lo] -= marg[len(hi):]
        dobj, d = dual_objective(a, y)
        return LpSolution(LpStatus.OPTIMAL, np.asarray(res.x), y, d, float(res.fun) + a.offset, dobj)

    def solve_mip(self, model: Milp, rel_gap: float = DEFAULT_GAP, node_limit: int | None = None) -> MipSolution:
        from scipy.optimize import Bounds, LinearConstraint, milp

        a = model.arrays
        options = {"mip_rel_gap": rel_gap}
        if node_limit is not None:
            options["node_limit"] = int(node_limit)
        cons = LinearConstraint(a.A, a.row_lo, a.row_hi) if a.A.shape[0] else ()
        res = milp(a.c, constraints=cons, bounds=Bounds(a.lb, a.ub), integrality=a.binary.astype(int), options=options)
        nodes = int(getattr(res, "mip_node_count", 0) or 0)
        if res.x is None:
            st = MipStatus.INFEASIBLE if res.status == 2 else MipStatus.NODE_LIMIT
            return MipSolution(st, None, math.inf, math.inf, math.inf, nodes)
        x = np.asarray(res.x, dtype=float).copy()
        x[a.binary] = np.round(x[a.binary])
        obj = float(res.fun) + a.offset
        bound = getattr(res, "mip_dual_bound", None)
        bound = obj if bound is None or not np.isfinite(bound) else min(float(bound) + a.offset, obj)
        gap = relative_gap(obj, bound)
        if res.status == 0:
            st = MipStatus.OPTIMAL if gap <= 1e-9 else MipStatus.GAP_REACHED
        else:
            st = MipStatus.NODE_LIMIT
        return MipSolution(st, x, obj, bound, gap, nodes)


_BACKENDS = {"builtin": BuiltinBackend, "highs": HighsBackend}


@dataclass
class SolverHandle:
    """Routes solves to a backend and enforces the result contract."""

    backend: SolverBackend

    @property
    def name(self) -> str:
        return getattr(self.backend, "name", type(self.backend).__name__)

    def solve_lp(self, model: Milp) -> LpSolution:
        sol = self.backend.solve_lp(model)
        if sol.status is LpStatus.OPTIMAL:
            viol = model.max_violation(sol.primal)
            if viol > ROW_TOL:
                raise BackendUnavailable(f"{self.name}: LP solution violates the model by {viol:.3g}")
        return sol

    def solve_mip(self, model: Milp, rel_gap: float = DEFAULT_GAP, node_limit: int | None = None) -> MipSolution:
        sol = self.backend.solve_mip(model, rel_gap, node_limit)
        if sol.incumbent is not None:
            viol = model.max_violation(sol.incumbent)
            frac = model.max_integrality_violation(sol.incumbent)
            if viol > ROW_TOL or frac > ROW_TOL:
                raise BackendUnavailable(
                    f"{self.name}: incumbent violates the model (rows {viol:.3g}, integrality {frac:.3g})"
                )
        return sol


_active: SolverHandle | None = None


def register_backend(backend: SolverBackend | str) -> SolverHandle:
    """Make ``backend`` (an object or a registered name) the target of :func:`get_solver`."""
    global _active
    if isinstance(backend, str):
        if backend not in _BACKENDS:
            raise BackendUnavailable(f"unknown backend {backend!r}; choose from {sorted(_BACKENDS)}")
        backend = _BACKENDS[backend]()
    if not (callable(getattr(backend, "solve_lp", None)) and callable(getattr(backend, "solve_mip", None))):
        raise BackendUnavailable(f"{backend!r} does not implement solve_lp/solve_mip")
    _active = SolverHandle(backend)
    return _active


def reset_backend() -> SolverHandle:
    global _active
    _active = SolverHandle(BuiltinBackend())
    return _active


def get_solver() -> SolverHandle:
    """Active handle; on first use honours ``PSH_SOLVER_BACKEND`` (default ``builtin``)."""
    if _active is None:
        choice = os.environ.get(ENV_VAR, "").strip() or "builtin"
        register_backend(choice)
    return _active
