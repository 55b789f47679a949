import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pshuc.formulation import Schedule, build_legacy, build_proposed
from pshuc.model import Case, Horizon, Mode, two_unit_case
from pshuc.pricing import (
    FixedLpInfeasible,
    HorizonMismatch,
    PriceSeries,
    compute_lmp,
    fixed_commitment_model,
    psh_profit,
)
from pshuc.solver import HighsBackend, MipSolution, MipStatus, solve_lp, solve_mip


def thermal_only(load):
    case = two_unit_case()
    return Case((), (), case.thermal_units, Horizon(len(load), tuple(float(x) for x in load)))


def price_at(case):
    model, vmap = build_proposed(case)
    mip = solve_mip(model)
    return compute_lmp(model, mip, vmap)


@pytest.mark.parametrize("load, expected", [(100.0, 15.0), (600.0, 20.0)])
def test_single_interval_marginal_unit(load, expected):
    # with the PSH units present, fixed reservoir endpoints rule out any storage activity in one hour
    case = two_unit_case([load], with_bids=False)
    prices = price_at(case)
    assert prices.lmp == (pytest.approx(expected),)
    hi = price_at(two_unit_case([load + 1.0], with_bids=False)).objective
    lo = price_at(two_unit_case([load - 1.0], with_bids=False)).objective
    assert (hi - lo) / 2.0 == pytest.approx(expected, rel=1e-6)


def test_load_above_capacity_has_no_prices():
    case = thermal_only([2000.0])
    model, vmap = build_proposed(case)
    with pytest.raises(FixedLpInfeasible):
        compute_lmp(model, None, vmap)


def test_fixed_lp_infeasible_for_inconsistent_incumbent():
    case = two_unit_case([2000.0], with_bids=False)
    model, vmap = build_proposed(case)
    x = np.zeros(len(model.variables))
    for g in ("PSH_A", "PSH_B"):
        x[vmap[("u", g, 0, Mode.ALL_OFF)]] = 1.0
    fake = MipSolution(MipStatus.OPTIMAL, x, 0.0, 0.0, 0.0, 1)
    with pytest.raises(FixedLpInfeasible):
        compute_lmp(model, fake, vmap)


def test_pricing_requires_incumbent():
    model, vmap = build_proposed(two_unit_case([500.0], with_bids=False))
    with pytest.raises(ValueError):
        compute_lmp(model, MipSolution(MipStatus.INFEASIBLE, None, np.inf, np.inf, np.inf, 1), vmap)


@pytest.mark.parametrize("builder", [build_proposed, build_legacy])
def test_fixed_lp_matches_mip_objective_and_strong_duality(builder):
    case = two_unit_case()
    model, vmap = builder(case)
    mip = solve_mip(model)
    prices = compute_lmp(model, mip, vmap)
    assert prices.objective == pytest.approx(mip.objective, rel=1e-6)
    assert abs(prices.objective - prices.dual_objective) <= 1e-6 * (1 + abs(prices.objective))
    assert len(prices) == 24


def sched(q_gen, q_pump):
    T = len(q_gen)
    modes = tuple(Mode.GEN if g else Mode.PUMP if p else Mode.ALL_OFF for g, p in zip(q_gen, q_pump))
    return Schedule("proposed", 1.0, (0.0,) * T, {"G": modes}, {"G": tuple(q_gen)}, {"G": tuple(q_pump)}, {}, {})


def test_all_off_profit_is_zero():
    s = sched([0.0] * 3, [0.0] * 3)
    assert psh_profit(s, PriceSeries((10.0, 20.0, 30.0), 0.0, 0.0), "G").profit == 0.0


def test_pump_then_generate_profit():
    s = sched([0.0, 180.0], [200.0, 0.0])
    st_ = psh_profit(s, PriceSeries((10.0, 30.0), 0.0, 0.0), "G")
    assert (st_.energy_revenue, st_.pumping_cost, st_.profit) == (5400.0, 2000.0, 3400.0)


def test_horizon_mismatch():
    s = sched([0.0] * 24, [0.0] * 24)
    with pytest.raises(HorizonMismatch):
        psh_profit(s, PriceSeries((1.0,) * 23, 0.0, 0.0), "G")


@given(
    st.lists(st.tuples(st.floats(0, 200), st.floats(0, 200), st.floats(-50, 200)), min_size=1, max_size=24),
    st.floats(0.1, 10),
)
def test_profit_is_linear_in_prices(rows, k):
    s = sched([r[0] for r in rows], [r[1] for r in rows])
    p = tuple(r[2] for r in rows)
    a = psh_profit(s, PriceSeries(p, 0.0, 0.0), "G")
    b = psh_profit(s, PriceSeries(tuple(k * x for x in p), 0.0, 0.0), "G")
    assert b.energy_revenue == pytest.approx(k * a.energy_revenue, rel=1e-9, abs=1e-6)
    assert b.pumping_cost == pytest.approx(k * a.pumping_cost, rel=1e-9, abs=1e-6)
    assert b.profit == pytest.approx(k * a.profit, rel=1e-9, abs=1e-6)
    assert a.profit == a.energy_revenue - a.pumping_cost


@given(st.lists(st.integers(1, 1499), min_size=1, max_size=6), st.data())
def test_price_perturbation_consistency(load, data):
    # stay away from segment edges so the optimal basis is unique
    load = [x + 0.5 for x in load if x not in (500, 900)] or [250.5]
    case = thermal_only(load)
    model, vmap = build_proposed(case)
    prices = compute_lmp(model, None, vmap)
    t = data.draw(st.integers(0, len(load) - 1))
    eps = 0.25
    bumped = list(load)
    bumped[t] += eps
    obj2 = compute_lmp(build_proposed(thermal_only(bumped))[0], None).objective
    assert obj2 - prices.objective == pytest.approx(eps * prices.lmp[t], rel=1e-6)


def test_highs_backend_prices_agree_on_unique_instance():
    case = two_unit_case([100.0], with_bids=False)
    model, vmap = build_proposed(case)
    mip = solve_mip(model)
    fixed = fixed_commitment_model(model, mip.incumbent)
    a = solve_lp(fixed)
    b = HighsBackend().solve_lp(fixed)
    i = fixed.row_index["balance[0]"]
    assert a.duals[i] == pytest.approx(b.duals[i])
