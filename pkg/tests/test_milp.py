import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pshuc.formulation import build_proposed
from pshuc.milp import (
    ConstraintRow,
    Integrality,
    InvalidModel,
    Milp,
    ModelBuilder,
    Sense,
    ValueOutOfBounds,
    Variable,
    combine,
    fix_variable,
    fix_variables,
    from_lp_text,
    model_stats,
    to_lp_text,
)
from pshuc.model import two_unit_case


def small():
    b = ModelBuilder()
    x = b.add_var("x", 0, 10, cost=1.0)
    y = b.add_var("y", 0, math.inf, cost=2.0)
    z = b.add_binary("z", cost=-3.0)
    b.add_row("r1", [(x, 1.0), (y, 1.0)], Sense.LE, 1.0)
    b.add_row("r2", [(x, 1.0), (z, 2.0)], Sense.GE, 0.5)
    return b.build()


def test_empty_model_stats():
    assert tuple(model_stats(Milp())) == (0, 0, 0, 0)


def test_two_variable_stats():
    b = ModelBuilder()
    x, y = b.add_var("x"), b.add_var("y")
    b.add_row("c", [(x, 1), (y, 1)], "<=", 1)
    assert tuple(model_stats(b.build())) == (2, 0, 1, 2)


def test_invariants_enforced():
    with pytest.raises(InvalidModel):
        Variable("v", 2.0, 1.0)
    with pytest.raises(InvalidModel):
        Variable("b", 0.0, 2.0, Integrality.BINARY)
    with pytest.raises(InvalidModel):
        ConstraintRow("r", ((0, 1.0), (0, 2.0)), Sense.LE, 1.0)
    with pytest.raises(InvalidModel):
        ConstraintRow("r", ((0, 0.0),), Sense.LE, 1.0)
    with pytest.raises(InvalidModel):
        Milp((Variable("x"),), (ConstraintRow("r", ((3, 1.0),), Sense.LE, 1.0),))


def test_builder_merges_duplicate_terms():
    b = ModelBuilder()
    x = b.add_var("x")
    b.add_row("r", [(x, 1.0), (x, 2.0)], Sense.EQ, 3.0)
    assert b.build().rows[0].terms == ((x, 3.0),)


def test_fix_binary():
    m = small()
    fixed = fix_variable(m, 2, 1.0)
    assert (fixed.variables[2].lower, fixed.variables[2].upper) == (1.0, 1.0)
    assert (m.variables[2].lower, m.variables[2].upper) == (0.0, 1.0)
    with pytest.raises(ValueOutOfBounds):
        fix_variable(m, 2, 0.5)
    with pytest.raises(ValueOutOfBounds):
        fix_variable(m, 0, 11.0)
    assert model_stats(fixed) == model_stats(m)


def test_proposed_counts_one_unit_four_intervals():
    case = two_unit_case([100, 200, 300, 400], with_bids=False)
    case = type(case)(case.psh_units[:1], case.reservoirs, case.thermal_units, case.horizon)
    model, vmap = build_proposed(case)
    assert len(vmap.family("u")) == 12
    assert len(vmap.family("v")) == 24
    assert len(vmap.family("e")) == 5
    assert model_stats(model).n_binaries == 36


def test_lp_text_round_trip():
    m = small()
    back = from_lp_text(to_lp_text(m))
    assert model_stats(back) == model_stats(m)
    assert [v.name for v in back.variables] == [v.name for v in m.variables]
    assert [r.name for r in back.rows] == [r.name for r in m.rows]
    assert [(v.lower, v.upper, v.integrality, v.objective_coeff) for v in back.variables] == [
        (v.lower, v.upper, v.integrality, v.objective_coeff) for v in m.variables
    ]


def test_lp_text_round_trip_full_model():
    model, _ = build_proposed(two_unit_case())
    back = from_lp_text(to_lp_text(model))
    assert model_stats(back) == model_stats(model)


def test_violation_measures():
    m = small()
    assert m.max_violation([0.5, 0.5, 0.0]) == 0.0
    assert m.max_violation([1.0, 1.0, 0.0]) == pytest.approx(1.0)
    assert m.max_integrality_violation([0, 0, 0.25]) == pytest.approx(0.25)


@st.composite
def random_model(draw, prefix):
    b = ModelBuilder(name=prefix)
    nv = draw(st.integers(0, 5))
    for j in range(nv):
        if draw(st.booleans()):
            b.add_binary(f"{prefix}b{j}")
        else:
            b.add_var(f"{prefix}x{j}", 0.0, draw(st.floats(0, 10)))
    for i in range(draw(st.integers(0, 4)) if nv else 0):
        cols = draw(st.lists(st.integers(0, nv - 1), min_size=1, max_size=nv, unique=True))
        b.add_row(f"{prefix}r{i}", [(j, 1.0) for j in cols], Sense.LE, 1.0)
    return b.build()


@given(random_model("a"), random_model("b"))
def test_stats_additive_over_disjoint_union(a, b):
    u = combine(a, b)
    assert tuple(model_stats(u)) == tuple(x + y for x, y in zip(model_stats(a), model_stats(b)))


@given(random_model("a"), st.data())
def test_fixing_preserves_stats(m, data):
    bins = m.binary_indices
    if not bins:
        return
    values = {j: data.draw(st.sampled_from([0.0, 1.0])) for j in bins}
    assert model_stats(fix_variables(m, values)) == model_stats(m)
