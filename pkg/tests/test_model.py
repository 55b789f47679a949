from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pshuc.model import (
    ALL_TRANSITIONS,
    MODES,
    BoundViolation,
    CaseValidationError,
    DanglingReference,
    DuplicateId,
    EfficiencyOutOfRange,
    Mode,
    ThermalUnit,
    find_violations,
    two_unit_case,
    validate_case,
)


def test_modes_are_exactly_three():
    assert {m.value for m in Mode} == {"alloff", "gen", "pump"}
    assert len(MODES) == 3
    assert len(ALL_TRANSITIONS) == 6


def test_two_unit_case_is_valid():
    case = two_unit_case()
    vc = validate_case(case)
    assert vc.case is case
    g = case.psh_units[0]
    assert (g.q_pump_min, g.q_pump_max, g.eta_pump) == (200.0, 200.0, 0.9)
    assert (g.q_gen_min, g.q_gen_max, g.eta_gen) == (100.0, 200.0, 0.9)
    assert g.block_loaded_pump
    r = case.reservoirs[0]
    assert (r.e_min, r.e_max, r.e_initial, r.e_final) == (1000.0, 3500.0, 2600.0, 2600.0)
    assert sorted((k.q_max, k.cost_segments[0][0]) for k in case.thermal_units) == [
        (400.0, 20.0), (500.0, 15.0), (600.0, 30.0)
    ]


def test_initial_above_ceiling_is_bound_violation():
    case = two_unit_case()
    bad = replace(case, reservoirs=(replace(case.reservoirs[0], e_initial=4000.0),))
    with pytest.raises(BoundViolation) as err:
        validate_case(bad)
    assert any(v.field == "reservoirs[0].e_initial" for v in err.value.violations)


def test_pump_efficiency_above_one():
    case = two_unit_case()
    bad = replace(case, psh_units=(replace(case.psh_units[0], eta_pump=1.3), case.psh_units[1]))
    with pytest.raises(EfficiencyOutOfRange) as err:
        validate_case(bad)
    assert err.value.violations[0].field == "psh_units[0].eta_pump"


def test_duplicate_and_dangling_ids():
    case = two_unit_case()
    dup = replace(case, psh_units=(case.psh_units[0], replace(case.psh_units[1], id="PSH_A")))
    with pytest.raises(DuplicateId):
        validate_case(dup)
    dangling = replace(case, psh_units=(replace(case.psh_units[0], reservoir_id="R9"), case.psh_units[1]))
    with pytest.raises(DanglingReference):
        validate_case(dangling)


def test_bid_windows_must_be_disjoint():
    case = two_unit_case()
    b = case.legacy_bids[0]
    bad = replace(case, legacy_bids=(replace(b, gen_window=b.gen_window | {0}), case.legacy_bids[1]))
    kinds = {v.field for v in find_violations(bad)}
    assert "legacy_bids[0].pump_window" in kinds


def test_self_transition_rejected():
    case = two_unit_case()
    g = replace(case.psh_units[0], feasible_transitions=frozenset({(Mode.GEN, Mode.GEN)}))
    with pytest.raises(BoundViolation):
        validate_case(replace(case, psh_units=(g, case.psh_units[1])))


def test_segment_widths_must_cover_range():
    case = two_unit_case()
    bad_k = ThermalUnit("TG1", 0.0, 600.0, ((30.0, 500.0),))
    with pytest.raises(CaseValidationError):
        validate_case(replace(case, thermal_units=(bad_k,) + case.thermal_units[1:]))


def test_thermal_cost_rate():
    k = ThermalUnit("K", 50.0, 250.0, ((10.0, 100.0), (20.0, 100.0)))
    assert k.cost_rate(50.0) == 0.0
    assert k.cost_rate(120.0) == 700.0
    assert k.cost_rate(250.0) == 3000.0
    assert k.marginal_price(100.0) == 10.0
    assert k.marginal_price(200.0) == 20.0


@given(
    e_min=st.floats(0, 1e4),
    span=st.floats(0, 1e4),
    a=st.floats(-1, 2),
    b=st.floats(-1, 2),
)
def test_validation_iff_reservoir_invariants(e_min, span, a, b):
    case = two_unit_case()
    e_max = e_min + span
    r = replace(case.reservoirs[0], e_min=e_min, e_max=e_max, e_initial=e_min + a * span, e_final=e_min + b * span)
    c = replace(case, reservoirs=(r,))
    ok = e_min <= r.e_initial <= e_max and e_min <= r.e_final <= e_max
    assert (not find_violations(c)) == ok
    # purity: repeated checks agree
    assert find_violations(c) == find_violations(c)
