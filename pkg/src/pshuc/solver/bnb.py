"""Best-bound branch-and-bound over the simplex engine.

Branching picks the most fractional binary (lowest index on ties); the open
node with the smallest LP bound is processed next (lowest node id on ties).
Children are evaluated when created, warm-started from the parent basis.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..milp import Milp
from .simplex import LpStatus, SimplexEngine

INT_TOL = 1e-6
DEFAULT_GAP = 1e-6
OPERATIONAL_GAP = 1e-2


class MipStatus(str, Enum):
    OPTIMAL = "optimal"
    GAP_REACHED = "gap_reached"
    INFEASIBLE = "infeasible"
    NODE_LIMIT = "node_limit"


class MipInfeasible(RuntimeError):
    """No integral feasible point exists."""


@dataclass
class MipSolution:
    status: MipStatus
    incumbent: np.ndarray | None
    objective: float
    best_bound: float
    gap: float
    nodes_explored: int
    bound_history: list[float] = field(default_factory=list, repr=False)
    incumbent_history: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def has_incumbent(self) -> bool:
        return self.incumbent is not None

    def require_incumbent(self) -> np.ndarray:
        if self.incumbent is None:
            raise MipInfeasible(f"no incumbent (status {self.status.value})")
        return self.incumbent


def relative_gap(objective: float, bound: float) -> float:
    if not math.isfinite(objective):
        return math.inf
    return max(0.0, (objective - bound) / max(1e-10, abs(objective)))


@dataclass(order=True)
class _Node:
    bound: float
    node_id: int
    lb: np.ndarray = field(compare=False)
    ub: np.ndarray = field(compare=False)
    snap: tuple = field(compare=False)
    x: np.ndarray = field(compare=False)


def _polish(engine: SimplexEngine, binary: np.ndarray, x: np.ndarray):
    """Fix every binary at its rounded value and re-solve the continuous part."""
    for j in binary:
        v = float(np.floor(x[j] + 0.5))
        engine.set_bounds(j, v, v)
    sol = engine.resolve()
    if sol.status is not LpStatus.OPTIMAL:
        return None
    out = sol.primal.copy()
    out[binary] = np.floor(out[binary] + 0.5)
    return out, sol.objective


def _dive(engine: SimplexEngine, node: _Node, binary: np.ndarray):
    """Rounding dive from ``node``: repeatedly fix the most fractional binary to its nearest value."""
    engine.load(node.snap, node.lb, node.ub)
    x = node.x
    for _ in range(len(binary) + 1):
        xb = x[binary]
        frac = np.abs(xb - np.round(xb))
        if not np.any(frac > INT_TOL):
            return _polish(engine, binary, x)
        k = int(binary[np.argmin(np.abs(xb - 0.5) + (frac <= INT_TOL) * 10.0)])
        v = float(np.floor(x[k] + 0.5))
        for value in (v, 1.0 - v):
            engine.set_bounds(k, value, value)
            sol = engine.resolve()
            if sol.status is LpStatus.OPTIMAL:
                break
        else:
            return None
        x = sol.primal
    return None


def solve_mip(
    model: Milp,
    rel_gap: float = DEFAULT_GAP,
    node_limit: int | None = None,
    *,
    dive_every: int = 50,
) -> MipSolution:
    """Branch-and-bound to relative gap ``rel_gap`` or ``node_limit`` processed nodes.

    A rounding dive runs at the root and every ``dive_every`` nodes (0 disables it).
    """
    if rel_gap < 0:
        raise ValueError("rel_gap must be >= 0")
    arrays = model.arrays
    binary = np.flatnonzero(arrays.binary)
    engine = SimplexEngine(arrays)
    engine.want_duals = False
    root = engine.solve()
    if root.status is LpStatus.UNBOUNDED:
        raise ValueError("LP relaxation is unbounded; MIP objective is not bounded below")
    if root.status is LpStatus.INFEASIBLE:
        return MipSolution(MipStatus.INFEASIBLE, None, math.inf, math.inf, math.inf, 1, [math.inf])

    base_lb = engine.lb[: engine.n].copy()
    base_ub = engine.ub[: engine.n].copy()
    counter = 0
    heap: list[_Node] = [_Node(root.objective, counter, base_lb, base_ub, engine.snapshot(), root.primal)]
    inc_x: np.ndarray | None = None
    inc_obj = math.inf
    nodes = 0
    history: list[float] = []
    inc_history: list[np.ndarray] = []
    status = None

    def global_bound() -> float:
        return min(heap[0].bound if heap else math.inf, inc_obj)

    def prune_tol(obj):
        return 1e-9 * max(1.0, abs(obj))

    def offer(candidate):
        nonlocal inc_x, inc_obj, heap
        if candidate is None:
            return
        x, obj = candidate
        if obj < inc_obj - prune_tol(obj):
            inc_x, inc_obj = x, obj
            inc_history.append(x)
            heap = [nd for nd in heap if nd.bound < inc_obj - prune_tol(inc_obj)]
            heapq.heapify(heap)

    while heap:
        bound = global_bound()
        if inc_x is not None and relative_gap(inc_obj, bound) <= rel_gap:
            status = MipStatus.GAP_REACHED
            break
        if node_limit is not None and nodes >= node_limit:
            status = MipStatus.NODE_LIMIT
            break
        node = heapq.heappop(heap)
        if node.bound >= inc_obj - prune_tol(inc_obj):
            continue
        nodes += 1
        xb = node.x[binary]
        frac = np.abs(xb - np.round(xb))
        if not np.any(frac > INT_TOL):
            engine.load(node.snap, node.lb, node.ub)
            offer(_polish(engine, binary, node.x))
            history.append(global_bound())
            continue
        if dive_every and (nodes == 1 or nodes % dive_every == 0):
            offer(_dive(engine, node, binary))
        # most fractional: distance to 0.5 smallest, lowest index first
        k = int(binary[np.argmin(np.abs(xb - 0.5) + (frac <= INT_TOL) * 10.0)])
        for value in (0.0, 1.0):
            lb, ub = node.lb.copy(), node.ub.copy()
            lb[k] = ub[k] = value
            engine.load(node.snap, lb, ub)
            sol = engine.resolve()
            if sol.status is not LpStatus.OPTIMAL:
                continue
            child_bound = max(sol.objective, node.bound)
            if child_bound >= inc_obj - prune_tol(inc_obj):
                continue
            counter += 1
            heapq.heappush(heap, _Node(child_bound, counter, lb, ub, engine.snapshot(), sol.primal))
        history.append(min(global_bound(), max(node.bound, history[-1] if history else -math.inf)))

    if inc_x is None:
        if status is MipStatus.NODE_LIMIT:
            return MipSolution(MipStatus.NODE_LIMIT, None, math.inf, global_bound(), math.inf, nodes, history)
        return MipSolution(MipStatus.INFEASIBLE, None, math.inf, math.inf, math.inf, nodes, history)
    if status is None:
        status = MipStatus.OPTIMAL
        best = inc_obj
    else:
        best = global_bound()
    history.append(best)
    return MipSolution(status, inc_x, inc_obj, best, relative_gap(inc_obj, best), nodes, history, inc_history)
