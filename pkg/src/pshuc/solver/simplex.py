"""Bounded-variable revised simplex on a sparse LU factorization with eta updates.

Rows ``lo <= A x <= hi`` are written as ``A x - r = 0`` with one logical
variable ``r`` per row carrying the row bounds. Phase 1 adds one artificial
per row. Cold solves use the primal method; after bound changes the engine
re-optimizes from the previous basis with the dual method, which is what
branch-and-bound and the enumeration oracle rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..milp import Milp, ModelArrays

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
DUAL_TOL = 1e-9
REFACTOR_EVERY = 32
DEGENERATE_SWITCH = 40

AT_LOWER, AT_UPPER, BASIC, FREE_ZERO = 0, 1, 2, 3


class NumericalBreakdown(RuntimeError):
    """Pivoting failed; the instance most likely needs rescaling."""


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LpSolution:
    status: LpStatus
    primal: np.ndarray
    duals: np.ndarray
    reduced_costs: np.ndarray
    objective: float
    dual_objective: float = float("nan")
    iterations: int = 0
    degenerate: bool = False
    ray: np.ndarray | None = None

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def dual_objective(arrays: ModelArrays, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Lagrangian dual bound from row multipliers ``y``; reduced costs are recomputed from data."""
    d = arrays.c - arrays.A.T @ y
    total = arrays.offset
    for i, yi in enumerate(y):
        if yi > DUAL_TOL:
            total += yi * arrays.row_lo[i]
        elif yi < -DUAL_TOL:
            total += yi * arrays.row_hi[i]
    pos = d > DUAL_TOL
    neg = d < -DUAL_TOL
    with np.errstate(invalid="ignore"):
        total += float(np.sum(d[pos] * arrays.lb[pos])) + float(np.sum(d[neg] * arrays.ub[neg]))
    return float(total), d


class SimplexEngine:
    """Stateful LP solver over fixed constraint data with mutable column bounds."""

    def __init__(self, arrays: ModelArrays, max_iter: int | None = None):
        A = arrays.A.tocsc()
        m, n = A.shape
        self.m, self.n = m, n
        self.arrays = arrays
        self.offset = arrays.offset
        N = n + 2 * m
        self.N = N
        self.cost = np.zeros(N)
        self.cost[:n] = arrays.c
        self.lb = np.empty(N)
        self.ub = np.empty(N)
        self.lb[:n], self.ub[:n] = arrays.lb, arrays.ub
        self.lb[n:n + m], self.ub[n:n + m] = arrays.row_lo, arrays.row_hi
        self.lb[n + m:], self.ub[n + m:] = 0.0, 0.0
        self.sigma = np.ones(m)
        self._A = A
        self._build_matrix()
        self.x = np.zeros(N)
        self.status = np.zeros(N, dtype=np.int8)
        self.basis = np.zeros(m, dtype=np.int64)
        self._lu = None
        self._etas: list[tuple[int, np.ndarray]] = []
        self.max_iter = max_iter or 50 * (N + 10)
        self.iterations = 0
        self.has_basis = False
        self.want_duals = True

    def _build_matrix(self):
        m = self.m
        eye = sp.identity(m, format="csc")
        art = sp.diags(self.sigma, format="csc")
        self.M = sp.hstack([self._A, -eye, art], format="csc")
        self.MT = self.M.T.tocsr()
        self._indptr, self._indices, self._data = self.M.indptr, self.M.indices, self.M.data

    def column(self, j: int) -> np.ndarray:
        col = np.zeros(self.m)
        s, e = self._indptr[j], self._indptr[j + 1]
        col[self._indices[s:e]] = self._data[s:e]
        return col

    # --- basis bookkeeping ------------------------------------------------

    def refactor(self):
        self._etas = []
        if self.m == 0:
            return
        B = self.M[:, self.basis].tocsc()
        try:
            self._lu = splu(B, permc_spec="COLAMD", options={"SymmetricMode": False})
        except RuntimeError as exc:
            raise NumericalBreakdown(f"basis factorization failed: {exc}") from exc
        self.recompute_basic()
        if not np.all(np.isfinite(self.x[self.basis])):
            raise NumericalBreakdown("non-finite basic solution")

    def ftran(self, a: np.ndarray) -> np.ndarray:
        """B^{-1} a."""
        if self.m == 0:
            return np.zeros(0)
        z = self._lu.solve(a)
        for r, alpha in self._etas:
            zr = z[r] / alpha[r]
            z -= alpha * zr
            z[r] = zr
        return z

    def btran(self, c: np.ndarray) -> np.ndarray:
        """B^{-T} c."""
        if self.m == 0:
            return np.zeros(0)
        w = np.array(c, dtype=float)
        for r, alpha in reversed(self._etas):
            w[r] = (w[r] - (w @ alpha - w[r] * alpha[r])) / alpha[r]
        return self._lu.solve(w, trans="T")

    def recompute_basic(self):
        xn = self.x.copy()
        xn[self.basis] = 0.0
        self.x[self.basis] = -self.ftran(self.M @ xn)

    def _nonbasic_value(self, j: int, st: int) -> float:
        lo, hi = self.lb[j], self.ub[j]
        if st == AT_UPPER and np.isfinite(hi):
            return hi
        if np.isfinite(lo):
            return lo
        if np.isfinite(hi):
            return hi
        return 0.0

    def _place_nonbasic(self):
        nb = self.status != BASIC
        lo, hi = self.lb, self.ub
        val = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
        upper = (self.status == AT_UPPER) & np.isfinite(hi)
        val = np.where(upper, hi, val)
        self.x[nb] = val[nb]

    def set_bounds(self, j: int, lo: float, hi: float):
        self.lb[j], self.ub[j] = lo, hi
        if self.status[j] != BASIC:
            st = self.status[j]
            if st == FREE_ZERO or not (np.isfinite(lo) or np.isfinite(hi)):
                val = self._nonbasic_value(j, st)
            elif st == AT_UPPER:
                val = hi if np.isfinite(hi) else lo
            else:
                val = lo if np.isfinite(lo) else hi
            self.status[j] = AT_UPPER if val == hi and val != lo else AT_LOWER
            self.x[j] = val

    def snapshot(self):
        """Basis, nonbasic positions and the current factorization (shared, never mutated)."""
        return self.basis.copy(), self.status.copy(), self._lu, tuple(self._etas)

    def load(self, snap, lb: np.ndarray, ub: np.ndarray):
        """Install structural bounds and a saved basis with its factorization."""
        basis, status, lu, etas = snap
        self.basis = basis.copy()
        self.status = status.copy()
        self._lu, self._etas = lu, list(etas)
        self.lb[: self.n], self.ub[: self.n] = lb, ub
        self._place_nonbasic()
        if self.m and self._lu is None:
            self.refactor()
        elif self.m:
            self.recompute_basic()

    # --- primal simplex ---------------------------------------------------

    def _primal(self, cost: np.ndarray) -> LpStatus:
        m = self.m
        bland = False
        degenerate_run = 0
        while True:
            if self.iterations >= self.max_iter:
                raise NumericalBreakdown("iteration limit reached")
            if m:
                y = self.btran(cost[self.basis])
                d = cost - self.MT @ y
            else:
                d = cost.copy()
            nb = self.status != BASIC
            movable = nb & (self.lb < self.ub)
            can_inc = movable & (self.x < self.ub - FEAS_TOL)
            can_dec = movable & (self.x > self.lb + FEAS_TOL)
            gain = np.zeros(self.N)
            inc = can_inc & (d < -DUAL_TOL)
            dec = can_dec & (d > DUAL_TOL)
            gain[inc] = -d[inc]
            gain[dec] = np.maximum(gain[dec], d[dec])
            if not gain.any():
                return LpStatus.OPTIMAL
            q = int(np.flatnonzero(gain)[0]) if bland else int(np.argmax(gain))
            direction = 1.0 if inc[q] and -d[q] >= gain[q] else -1.0
            alpha = self.ftran(self.column(q)) if m else np.zeros(0)
            rate = -direction * alpha
            xb = self.x[self.basis]
            lbB, ubB = self.lb[self.basis], self.ub[self.basis]
            theta = np.full(m, np.inf)
            down = rate < -PIVOT_TOL
            up = rate > PIVOT_TOL
            with np.errstate(invalid="ignore", divide="ignore"):
                theta[down] = (xb[down] - lbB[down]) / -rate[down]
                theta[up] = (ubB[up] - xb[up]) / rate[up]
            theta = np.maximum(theta, 0.0)
            span = self.ub[q] - self.x[q] if direction > 0 else self.x[q] - self.lb[q]
            best = float(np.min(theta)) if m else np.inf
            if not np.isfinite(best) and not np.isfinite(span):
                ray = np.zeros(self.N)
                ray[q] = direction
                ray[self.basis] = rate
                self._ray = ray
                return LpStatus.UNBOUNDED
            if span <= best:
                self.x[q] += direction * span
                self.x[self.basis] = xb + rate * span
                self.status[q] = AT_UPPER if direction > 0 else AT_LOWER
                step = span
            else:
                ties = np.flatnonzero(theta <= best + 1e-12)
                if bland:
                    r = int(ties[np.argmin(self.basis[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(rate[ties]))])
                step = best
                self.x[self.basis] = xb + rate * step
                self.x[q] += direction * step
                leaving = self.basis[r]
                if rate[r] < 0:
                    self.x[leaving] = self.lb[leaving]
                    self.status[leaving] = AT_LOWER
                else:
                    self.x[leaving] = self.ub[leaving]
                    self.status[leaving] = AT_UPPER
                self._pivot(r, q, alpha)
            self.iterations += 1
            if step <= 1e-12:
                degenerate_run += 1
                if degenerate_run > DEGENERATE_SWITCH:
                    bland = True
            else:
                degenerate_run = 0
                bland = False

    def _pivot(self, r: int, q: int, alpha: np.ndarray):
        piv = alpha[r]
        if abs(piv) < PIVOT_TOL:
            raise NumericalBreakdown(f"pivot {piv:.3e} below tolerance")
        self.basis[r] = q
        self.status[q] = BASIC
        self._etas.append((r, alpha.copy()))
        if len(self._etas) >= REFACTOR_EVERY:
            self.refactor()

    # --- dual simplex -----------------------------------------------------

    def _dual(self, cost: np.ndarray) -> LpStatus:
        m = self.m
        d = None
        while True:
            if self.iterations >= self.max_iter:
                raise NumericalBreakdown("iteration limit reached")
            xb = self.x[self.basis]
            lbB, ubB = self.lb[self.basis], self.ub[self.basis]
            below = lbB - xb
            above = xb - ubB
            infeas = np.maximum(below, above)
            r = int(np.argmax(infeas)) if m else 0
            if not m or infeas[r] <= FEAS_TOL:
                return LpStatus.OPTIMAL
            to_lower = below[r] > above[r]
            target = lbB[r] if to_lower else ubB[r]
            if d is None or not self._etas:
                d = cost - self.MT @ self.btran(cost[self.basis])
            e_r = np.zeros(m)
            e_r[r] = 1.0
            rho = self.btran(e_r)
            arow = self.MT @ rho
            nb = (self.status != BASIC) & (self.lb < self.ub)
            can_inc = nb & (self.x < self.ub - FEAS_TOL)
            can_dec = nb & (self.x > self.lb + FEAS_TOL)
            if to_lower:
                inc_ok = can_inc & (arow < -PIVOT_TOL)
                dec_ok = can_dec & (arow > PIVOT_TOL)
            else:
                inc_ok = can_inc & (arow > PIVOT_TOL)
                dec_ok = can_dec & (arow < -PIVOT_TOL)
            ratio = np.full(self.N, np.inf)
            absa = np.abs(arow)
            with np.errstate(invalid="ignore", divide="ignore"):
                ratio[inc_ok] = np.maximum(d[inc_ok], 0.0) / absa[inc_ok]
                r_dec = np.maximum(-d[dec_ok], 0.0) / absa[dec_ok]
            ratio[dec_ok] = np.minimum(ratio[dec_ok], r_dec)
            best = float(np.min(ratio))
            if not np.isfinite(best):
                return LpStatus.INFEASIBLE
            ties = np.flatnonzero(ratio <= best + 1e-12)
            q = int(ties[np.argmax(absa[ties])])
            alpha = self.ftran(self.column(q))
            if abs(alpha[r] - arow[q]) > 1e-7 * (1 + abs(arow[q])):
                self.refactor()
                d = None
                continue
            d = d - (d[q] / arow[q]) * arow
            d[q] = 0.0
            delta = (xb[r] - target) / alpha[r]
            self.x[self.basis] = xb - alpha * delta
            self.x[q] += delta
            leaving = self.basis[r]
            self.x[leaving] = target
            self.status[leaving] = AT_LOWER if to_lower else AT_UPPER
            self._pivot(r, q, alpha)
            self.iterations += 1

    # --- drivers ----------------------------------------------------------

    def solve(self) -> LpSolution:
        """Cold start: phase 1 on artificials, then phase 2."""
        n, m = self.n, self.m
        self.iterations = 0
        self.lb[n + m:], self.ub[n + m:] = 0.0, np.inf
        self.x[:] = 0.0
        for j in range(n):
            self.status[j] = AT_LOWER if np.isfinite(self.lb[j]) else (AT_UPPER if np.isfinite(self.ub[j]) else FREE_ZERO)
            self.x[j] = self._nonbasic_value(j, self.status[j])
        act = self._A @ self.x[:n]
        basis = np.empty(m, dtype=np.int64)
        for i in range(m):
            lo, hi = self.lb[n + i], self.ub[n + i]
            li, ai = n + i, n + m + i
            if lo - FEAS_TOL <= act[i] <= hi + FEAS_TOL or not (np.isfinite(lo) or np.isfinite(hi)):
                basis[i] = li
                self.x[li] = act[i]
                self.sigma[i] = 1.0
                self.status[ai] = AT_LOWER
                self.x[ai] = 0.0
            else:
                bound = lo if (not np.isfinite(hi) or (np.isfinite(lo) and abs(act[i] - lo) <= abs(act[i] - hi))) else hi
                self.x[li] = bound
                self.status[li] = AT_LOWER if bound == lo else AT_UPPER
                res = act[i] - bound
                self.sigma[i] = -1.0 if res > 0 else 1.0
                basis[i] = ai
                self.x[ai] = abs(res)
        self._build_matrix()
        self.basis = basis
        self.status[basis] = BASIC
        self.refactor()
        phase1 = np.zeros(self.N)
        phase1[n + m:] = 1.0
        if np.any(basis >= n + m):
            st = self._primal(phase1)
            infeas = float(np.sum(self.x[n + m:]))
            if st is not LpStatus.OPTIMAL or infeas > 1e-6:
                # phase-1 multipliers certify infeasibility (Farkas direction over the rows)
                farkas = self.btran(phase1[self.basis])
                self.ub[n + m:] = 0.0
                self.has_basis = False
                out = self._result(LpStatus.INFEASIBLE)
                out.duals = farkas
                return out
        self.ub[n + m:] = 0.0
        nonbasic_art = np.flatnonzero(self.status[n + m:] != BASIC) + n + m
        self.x[nonbasic_art] = 0.0
        self.status[nonbasic_art] = AT_LOWER
        self.refactor()
        self.has_basis = True
        return self._finish()

    def resolve(self) -> LpSolution:
        """Warm start after :meth:`set_bounds` or :meth:`load`."""
        if not self.has_basis:
            return self.solve()
        self.iterations = 0
        self.recompute_basic()
        try:
            st = self._dual(self.cost)
        except NumericalBreakdown:
            return self.solve()
        if st is LpStatus.INFEASIBLE:
            return self._result(LpStatus.INFEASIBLE)
        return self._finish()

    def _finish(self) -> LpSolution:
        st = self._primal(self.cost)
        if st is LpStatus.OPTIMAL:
            self.recompute_basic()
            if self._max_basic_infeasibility() > FEAS_TOL:
                st2 = self._dual(self.cost)
                if st2 is LpStatus.INFEASIBLE:
                    return self._result(LpStatus.INFEASIBLE)
                self._primal(self.cost)
        return self._result(st)

    def _max_basic_infeasibility(self) -> float:
        if not self.m:
            return 0.0
        xb = self.x[self.basis]
        return float(max(np.max(self.lb[self.basis] - xb), np.max(xb - self.ub[self.basis])))

    def _result(self, status: LpStatus) -> LpSolution:
        n, m = self.n, self.m
        x = self.x[:n].copy()
        if status is LpStatus.OPTIMAL:
            obj = float(self.arrays.c @ x) + self.offset
            if not self.want_duals:
                return LpSolution(status, x, np.zeros(m), np.zeros(n), obj, np.nan, self.iterations)
            y = self.btran(self.cost[self.basis]) if m else np.zeros(0)
            dobj, d = dual_objective(self.arrays, y)
            xb = self.x[self.basis]
            at_bound = np.isclose(xb, self.lb[self.basis], atol=1e-9) | np.isclose(xb, self.ub[self.basis], atol=1e-9)
            return LpSolution(status, x, y, d, obj, dobj, self.iterations, bool(np.any(at_bound)))
        ray = getattr(self, "_ray", None) if status is LpStatus.UNBOUNDED else None
        obj = -np.inf if status is LpStatus.UNBOUNDED else np.inf
        return LpSolution(status, x, np.zeros(m), np.zeros(n), obj, np.nan, self.iterations, False,
                          None if ray is None else ray[:n])


def solve_lp(model: Milp) -> LpSolution:
    """Solve the continuous relaxation of ``model`` (integrality ignored)."""
    return SimplexEngine(model.arrays).solve()
