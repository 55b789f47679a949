"""Sparse MILP container with named rows and exact size accounting."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp


class Integrality(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


class Sense(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class ValueOutOfBounds(ValueError):
    pass


class InvalidModel(ValueError):
    pass


@dataclass(frozen=True)
class Variable:
    name: str
    lower: float = 0.0
    upper: float = math.inf
    integrality: Integrality = Integrality.CONTINUOUS
    objective_coeff: float = 0.0

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise InvalidModel(f"{self.name}: lower {self.lower} > upper {self.upper}")
        if self.integrality is Integrality.BINARY and (self.lower < 0 or self.upper > 1):
            raise InvalidModel(f"{self.name}: binary bounds must lie within [0, 1]")


@dataclass(frozen=True)
class ConstraintRow:
    name: str
    terms: tuple[tuple[int, float], ...]
    sense: Sense
    rhs: float

    def __post_init__(self):
        idx = [i for i, _ in self.terms]
        if len(set(idx)) != len(idx):
            raise InvalidModel(f"{self.name}: duplicate variable in terms")
        for _, a in self.terms:
            if a == 0 or not math.isfinite(a):
                raise InvalidModel(f"{self.name}: coefficients must be finite and nonzero")


class ModelStats(NamedTuple):
    n_variables: int
    n_binaries: int
    n_constraints: int
    n_nonzeros: int


class ModelArrays(NamedTuple):
    """Column-compressed view used by the solvers. Row i reads ``row_lo[i] <= A[i] x <= row_hi[i]``."""

    c: np.ndarray
    A: sp.csc_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    binary: np.ndarray
    offset: float


@dataclass(frozen=True)
class Milp:
    """Minimization MILP. Immutable once built; use :class:`ModelBuilder` to construct."""

    variables: tuple[Variable, ...] = ()
    rows: tuple[ConstraintRow, ...] = ()
    constant_offset: float = 0.0
    name: str = "model"

    def __post_init__(self):
        n = len(self.variables)
        for row in self.rows:
            for j, _ in row.terms:
                if not 0 <= j < n:
                    raise InvalidModel(f"row {row.name} references variable {j} of {n}")

    @cached_property
    def row_index(self) -> dict[str, int]:
        return {r.name: i for i, r in enumerate(self.rows)}

    @cached_property
    def var_index(self) -> dict[str, int]:
        return {v.name: j for j, v in enumerate(self.variables)}

    @cached_property
    def arrays(self) -> ModelArrays:
        n, m = len(self.variables), len(self.rows)
        c = np.array([v.objective_coeff for v in self.variables], dtype=float)
        lb = np.array([v.lower for v in self.variables], dtype=float)
        ub = np.array([v.upper for v in self.variables], dtype=float)
        binary = np.array([v.integrality is Integrality.BINARY for v in self.variables], dtype=bool)
        ri, ci, vals = [], [], []
        row_lo = np.full(m, -np.inf)
        row_hi = np.full(m, np.inf)
        for i, row in enumerate(self.rows):
            for j, a in row.terms:
                ri.append(i)
                ci.append(j)
                vals.append(a)
            if row.sense is not Sense.GE:
                row_hi[i] = row.rhs
            if row.sense is not Sense.LE:
                row_lo[i] = row.rhs
        A = sp.csc_matrix((vals, (ri, ci)), shape=(m, n), dtype=float)
        return ModelArrays(c.reshape(n), A, row_lo, row_hi, lb.reshape(n), ub.reshape(n), binary.reshape(n), self.constant_offset)

    @property
    def binary_indices(self) -> list[int]:
        return [j for j, v in enumerate(self.variables) if v.integrality is Integrality.BINARY]

    def objective_value(self, x) -> float:
        return float(self.arrays.c @ np.asarray(x, dtype=float)) + self.constant_offset

    def row_activity(self, x) -> np.ndarray:
        return self.arrays.A @ np.asarray(x, dtype=float)

    def max_violation(self, x) -> float:
        """Largest row or bound violation of ``x`` (absolute)."""
        a = self.arrays
        x = np.asarray(x, dtype=float)
        act = a.A @ x
        worst = 0.0
        if len(act):
            worst = max(worst, float(np.max(a.row_lo - act, initial=0.0)), float(np.max(act - a.row_hi, initial=0.0)))
        if len(x):
            worst = max(worst, float(np.max(a.lb - x, initial=0.0)), float(np.max(x - a.ub, initial=0.0)))
        return worst

    def max_integrality_violation(self, x) -> float:
        b = self.arrays.binary
        if not b.any():
            return 0.0
        xb = np.asarray(x, dtype=float)[b]
        return float(np.max(np.abs(xb - np.round(xb))))


@dataclass
class ModelBuilder:
    """Append-only construction of a :class:`Milp`."""

    name: str = "model"
    variables: list[Variable] = field(default_factory=list)
    rows: list[ConstraintRow] = field(default_factory=list)
    constant_offset: float = 0.0

    def add_var(self, name, lower=0.0, upper=math.inf, integrality=Integrality.CONTINUOUS, cost=0.0) -> int:
        self.variables.append(Variable(name, float(lower), float(upper), integrality, float(cost)))
        return len(self.variables) - 1

    def add_binary(self, name, cost=0.0, upper=1.0) -> int:
        return self.add_var(name, 0.0, upper, Integrality.BINARY, cost)

    def add_row(self, name, terms, sense: Sense | str, rhs: float) -> int:
        merged: dict[int, float] = {}
        for j, a in terms:
            merged[j] = merged.get(j, 0.0) + a
        clean = tuple((j, a) for j, a in merged.items() if a != 0)
        self.rows.append(ConstraintRow(name, clean, Sense(sense), float(rhs)))
        return len(self.rows) - 1

    def add_cost(self, j: int, cost: float) -> None:
        self.variables[j] = replace(self.variables[j], objective_coeff=self.variables[j].objective_coeff + cost)

    def build(self) -> Milp:
        return Milp(tuple(self.variables), tuple(self.rows), self.constant_offset, self.name)


def model_stats(model: Milp) -> ModelStats:
    return ModelStats(
        n_variables=len(model.variables),
        n_binaries=sum(v.integrality is Integrality.BINARY for v in model.variables),
        n_constraints=len(model.rows),
        n_nonzeros=sum(len(r.terms) for r in model.rows),
    )


def fix_variable(model: Milp, index: int, value: float) -> Milp:
    """Return a copy of ``model`` with variable ``index`` fixed at ``value``."""
    return fix_variables(model, {index: value})


def fix_variables(model: Milp, values: dict[int, float]) -> Milp:
    variables = list(model.variables)
    for j, value in values.items():
        var = variables[j]
        value = float(value)
        if not var.lower <= value <= var.upper:
            raise ValueOutOfBounds(f"{var.name}: {value} outside [{var.lower}, {var.upper}]")
        if var.integrality is Integrality.BINARY and value not in (0.0, 1.0):
            raise ValueOutOfBounds(f"{var.name}: binary cannot be fixed at {value}")
        variables[j] = replace(var, lower=value, upper=value)
    return Milp(tuple(variables), model.rows, model.constant_offset, model.name)


def combine(a: Milp, b: Milp) -> Milp:
    """Disjoint union: ``b``'s variables are appended after ``a``'s."""
    shift = len(a.variables)
    rows = tuple(
        ConstraintRow(r.name, tuple((j + shift, v) for j, v in r.terms), r.sense, r.rhs) for r in b.rows
    )
    return Milp(a.variables + b.variables, a.rows + rows, a.constant_offset + b.constant_offset, f"{a.name}+{b.name}")


# --- LP text export ---------------------------------------------------------

_SAFE = re.compile(r"[^A-Za-z0-9_.]")


def _lp_name(name: str) -> str:
    return _SAFE.sub("_", name)


def _fmt(x: float) -> str:
    return repr(float(x))


def to_lp_text(model: Milp) -> str:
    """CPLEX-LP style text. Names are sanitized; variables are x<j>, rows c<i>."""
    lines = [f"\\ {model.name}", "Minimize", " obj:"]
    obj = [f" {'+' if v.objective_coeff >= 0 else '-'} {_fmt(abs(v.objective_coeff))} x{j}"
           for j, v in enumerate(model.variables) if v.objective_coeff != 0]
    if model.constant_offset:
        obj.append(f" {'+' if model.constant_offset >= 0 else '-'} {_fmt(abs(model.constant_offset))}")
    lines.extend(obj)
    lines.append("Subject To")
    for i, r in enumerate(model.rows):
        terms = " ".join(f"{'+' if a >= 0 else '-'} {_fmt(abs(a))} x{j}" for j, a in r.terms)
        lines.append(f" c{i}: {terms} {r.sense.value} {_fmt(r.rhs)}")
    lines.append("Bounds")
    for j, v in enumerate(model.variables):
        lo = "-inf" if v.lower == -math.inf else _fmt(v.lower)
        hi = "+inf" if v.upper == math.inf else _fmt(v.upper)
        lines.append(f" {lo} <= x{j} <= {hi}")
    bins = [f"x{j}" for j, v in enumerate(model.variables) if v.integrality is Integrality.BINARY]
    if bins:
        lines.append("Binaries")
        lines.append(" " + " ".join(bins))
    lines.append("End")
    names = [f"\\ x{j} {_lp_name(v.name)}" for j, v in enumerate(model.variables)]
    names += [f"\\ c{i} {_lp_name(r.name)}" for i, r in enumerate(model.rows)]
    return "\n".join(lines + names) + "\n"


def from_lp_text(text: str) -> Milp:
    """Parse text written by :func:`to_lp_text` back into a model."""
    section = None
    obj: dict[int, float] = {}
    offset = 0.0
    rows: list[ConstraintRow] = []
    bounds: dict[int, tuple[float, float]] = {}
    binaries: set[int] = set()
    names: dict[str, str] = {}
    term_re = re.compile(r"([+-])\s*([0-9.eE+\-infa]+)(?:\s+x(\d+))?")

    def parse_terms(s):
        out, const = [], 0.0
        for sign, num, var in term_re.findall(s):
            val = float(num) * (-1 if sign == "-" else 1)
            if var:
                out.append((int(var), val))
            else:
                const += val
        return out, const

    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("\\"):
            parts = line[1:].split()
            if len(parts) == 2:
                names[parts[0]] = parts[1]
            continue
        if line in ("Minimize", "Subject To", "Bounds", "Binaries", "End"):
            section = line
            continue
        if section == "Minimize":
            body = line.split(":", 1)[1] if line.startswith("obj:") else line
            terms, const = parse_terms(body)
            for j, a in terms:
                obj[j] = obj.get(j, 0.0) + a
            offset += const
        elif section == "Subject To":
            label, body = line.split(":", 1)
            for op in ("<=", ">=", "="):
                if f" {op} " in body:
                    lhs, rhs = body.rsplit(f" {op} ", 1)
                    terms, _ = parse_terms(lhs)
                    rows.append(ConstraintRow(label.strip(), tuple(terms), Sense(op), float(rhs)))
                    break
        elif section == "Bounds":
            lo, _, var, _, hi = line.split()
            bounds[int(var[1:])] = (float(lo), float(hi))
        elif section == "Binaries":
            binaries.update(int(tok[1:]) for tok in line.split())
    n = max([*bounds, *obj, -1]) + 1
    variables = tuple(
        Variable(
            names.get(f"x{j}", f"x{j}"),
            bounds.get(j, (0.0, math.inf))[0],
            bounds.get(j, (0.0, math.inf))[1],
            Integrality.BINARY if j in binaries else Integrality.CONTINUOUS,
            obj.get(j, 0.0),
        )
        for j in range(n)
    )
    rows = [replace(r, name=names.get(r.name, r.name)) for r in rows]
    return Milp(variables, tuple(rows), offset)
