import csv
import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pshuc import io as pio
from pshuc.analysis import compare_models, random_shape_case, random_small_case
from pshuc.cli import EXIT_INFEASIBLE, EXIT_INPUT, EXIT_IO, EXIT_OK, main
from pshuc.formulation import build_proposed, decode_schedule
from pshuc.model import Mode, two_unit_case
from pshuc.pricing import compute_lmp
from pshuc.solver import solve_mip

BUNDLED = pio.bundled_case_path()


def test_bundled_case_loads():
    assert pio.load_case(BUNDLED) == two_unit_case()


def test_text_where_number_expected(tmp_path):
    doc = json.loads(BUNDLED.read_text())
    doc["psh_units"][0]["eta_pump"] = "0.9"
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(pio.SchemaViolation) as err:
        pio.load_case(p)
    assert err.value.field == "psh_units[0].eta_pump"


def test_empty_and_malformed_files(tmp_path):
    p = tmp_path / "empty.json"
    p.write_text("")
    with pytest.raises(pio.ParseError):
        pio.load_case(p)
    p.write_text('{"version": 1,\n "horizon": }')
    with pytest.raises(pio.ParseError, match="line 2"):
        pio.load_case(p)


def test_unknown_key_and_version(tmp_path):
    doc = json.loads(BUNDLED.read_text())
    doc["reservoirs"][0]["head_m"] = 300
    with pytest.raises(pio.SchemaViolation) as err:
        pio.case_from_dict(doc)
    assert err.value.field == "reservoirs[0]"
    doc = json.loads(BUNDLED.read_text())
    doc["version"] = 2
    with pytest.raises(pio.SchemaViolation):
        pio.case_from_dict(doc)


@given(st.integers(0, 2**31), st.booleans())
def test_case_round_trip(seed, small):
    rng = np.random.default_rng(seed)
    case = random_small_case(rng) if small else random_shape_case(rng)
    assert pio.case_from_dict(json.loads(json.dumps(pio.case_to_dict(case)))) == case


def test_results_round_trip_and_plot_data(tmp_path):
    rep = compare_models(two_unit_case())
    doc = pio.benefit_results(rep)
    path = tmp_path / "res.json"
    pio.save_results(doc, path)
    back = pio.load_results(path)
    for run, original in zip(back["runs"], (rep.legacy, rep.proposed)):
        assert pio.schedule_from_run(run) == original.schedule
    out = tmp_path / "plot.csv"
    pio.emit_plot_data(back, out)
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == list(pio.PLOT_COLUMNS)
    tags = [r["model_tag"] for r in rows]
    assert tags.count("legacy") == tags.count("proposed") == 24
    for run, original in zip(back["runs"], (rep.legacy, rep.proposed)):
        total = sum(float(r["psh_net_mw"]) for r in rows if r["model_tag"] == run["model_tag"])
        expected = sum(row["q_gen_mw"] - row["q_pump_mw"] for row in run["schedule"])
        assert total == pytest.approx(expected, abs=1e-9)


def test_plot_data_refuses_empty(tmp_path):
    with pytest.raises(pio.IoError):
        pio.emit_plot_data({"version": 1, "runs": []}, tmp_path / "x.csv")
    assert not (tmp_path / "x.csv").exists()


def test_cli_solve_and_plot(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["solve", "--case", str(BUNDLED), "--model", "proposed", "--out", str(out)]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["status"] == "optimal"
    csv_path = tmp_path / "p.csv"
    assert main(["plot-data", "--results", str(out), "--out", str(csv_path)]) == EXIT_OK
    assert csv_path.read_text().startswith("t,net_load_mw")


def test_cli_lmp_and_stats(tmp_path, capsys):
    out = tmp_path / "lmp.csv"
    assert main(["lmp", "--case", str(BUNDLED), "--model", "legacy", "--out", str(out)]) == EXIT_OK
    assert len(out.read_text().splitlines()) == 25
    capsys.readouterr()
    assert main(["stats", "--case", str(BUNDLED)]) == EXIT_OK
    stats = json.loads(capsys.readouterr().out)
    assert stats["compactness"]["added_soc_variables"] == 25


def test_cli_compare_scenarios(tmp_path, capsys):
    loads = tmp_path / "loads.json"
    loads.write_text(json.dumps([list(two_unit_case().horizon.net_load)]))
    out = tmp_path / "cmp.json"
    assert main(["compare", "--case", str(BUNDLED), "--scenarios", str(loads), "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["summary"]["dominance_holds"] == 1


def test_cli_error_categories(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("")
    assert main(["solve", "--case", str(bad)]) == EXIT_INPUT
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "parse_error"
    assert main(["solve", "--case", str(tmp_path / "missing.json")]) == EXIT_IO
    assert json.loads(capsys.readouterr().err)["error"] == "io_error"
    over = pio.case_to_dict(replace(two_unit_case(), horizon=replace(two_unit_case().horizon, net_load=(2500.0,) * 24)))
    p = tmp_path / "over.json"
    p.write_text(json.dumps(over))
    assert main(["solve", "--case", str(p)]) == EXIT_INFEASIBLE
    assert json.loads(capsys.readouterr().err)["error"] == "infeasible"


def test_cli_backend_flag(tmp_path, capsys):
    assert main(["--backend", "highs", "solve", "--case", str(BUNDLED), "--model", "legacy"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["status"] == "optimal"


def test_run_dict_preserves_floats():
    case = two_unit_case()
    model, vmap = build_proposed(case)
    mip = solve_mip(model)
    sched = decode_schedule(case, vmap, mip)
    run = pio.run_to_dict("proposed", sched, compute_lmp(model, mip, vmap), {"objective": mip.objective})
    again = pio.schedule_from_run(json.loads(json.dumps(run)))
    assert again == sched
    assert again.modes["PSH_A"][5] is Mode.PUMP
