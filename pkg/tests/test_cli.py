import json
from pathlib import Path

import pytest

from dciplan import example_scenario_path
from dciplan.budget import check_amplifier_power, link_budget
from dciplan.catalog import load_scenario
from dciplan.cli import main
from dciplan.dispersion import LinkParams, accumulated_cd, effective_reach, plan_compensation
from dciplan.gridplan import fiber_capacity
from dciplan.report import build_plan

SCENARIO = str(Path(__file__).resolve().parents[1] / "scenarios" / "paper-80km.json")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, "--json", *argv)
    return code, json.loads(out)


def test_bundled_scenario_matches_repo_copy():
    assert json.loads(Path(SCENARIO).read_text()) == json.loads(example_scenario_path().read_text())


def test_plan_pam4(capsys):
    code, doc = run_json(capsys, "plan", SCENARIO, "PAM4-112")
    assert code == 0
    assert doc["feasible"] is True
    assert doc["budget"]["achievable_osnr"] == pytest.approx(31.95, abs=0.01)
    assert doc["budget"]["residual_margin"] == pytest.approx(3.95, abs=0.01)
    comp = doc["compensation"]
    assert (comp["fixed_module"], comp["tunable_setting"], comp["residual_cd"]) == (-1360, 0, 0)


def test_plan_64qam(capsys):
    code, doc = run_json(capsys, "plan", SCENARIO, "64QAM-1000")
    assert code == 0
    assert doc["budget"]["residual_margin"] == pytest.approx(0.95, abs=0.01)


def test_plan_without_dcm_is_infeasible(capsys):
    code, out, _ = run(capsys, "plan", SCENARIO, "PAM4-112", "--no-dcm")
    assert code == 2
    assert "FAIL" in out and "feasible           no" in out


def test_plan_missing_file(capsys):
    code, _, err = run(capsys, "plan", "does/not/exist.json", "PAM4-112")
    assert code == 1
    assert "does/not/exist.json" in err


def test_plan_unknown_profile_lists_ids(capsys):
    code, _, err = run(capsys, "plan", SCENARIO, "NOPE")
    assert code == 1
    assert "PAM4-112" in err and "DP-QPSK-100" in err


def test_usage_error_is_exit_1(capsys):
    code, _, _ = run(capsys, "plan")
    assert code == 1


def test_strict_and_lenient(tmp_path, capsys):
    doc = json.loads(Path(SCENARIO).read_text())
    doc["comment"] = "extra"
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    assert run(capsys, "plan", str(path), "PAM4-112")[0] == 1
    assert run(capsys, "--lenient", "plan", str(path), "PAM4-112")[0] == 0


def test_invalid_scenario_is_exit_1(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"fiber": {"loss_coeff": -1}, "spans": []}')
    code, _, err = run(capsys, "plan", str(path), "PAM4-112")
    assert code == 1 and "loss_coeff > 0" in err


def test_report_numbers_come_from_modules():
    sc = load_scenario(SCENARIO)
    profile = sc.profile("PAM4-112")
    r = build_plan(sc, "PAM4-112")
    assert r.budget == link_budget(sc.link, profile.required_osnr)
    assert r.accumulated_cd == accumulated_cd(sc.link).value
    assert r.compensation == plan_compensation(accumulated_cd(sc.link), sc.inventory, profile.cd_tolerance)
    assert r.reach == effective_reach(profile, sc.fiber, LinkParams.from_link(sc.link), sc.inventory)
    cap = fiber_capacity([sc.band("C"), sc.band("L")], profile, sc.fiber)
    assert r.capacity == cap
    assert r.power == check_amplifier_power(3.0, max(cap.channels.values()), sc.link.preamp)


def test_json_and_table_agree(capsys):
    _, doc = run_json(capsys, "plan", SCENARIO, "PAM4-112")
    _, table, _ = run(capsys, "plan", SCENARIO, "PAM4-112")
    assert f"{doc['budget']['achievable_osnr']:.2f} dB" in table
    assert f"{doc['budget']['residual_margin']:.2f} dB" in table
    assert f"{doc['reach']['km']:.1f} km" in table
    assert f"{doc['capacity']['total_tbps']:.2f} Tb/s" in table


def test_compare(capsys):
    code, rows = run_json(capsys, "compare", SCENARIO)
    assert code == 0
    by_id = {r["profile"]: r for r in rows}
    assert by_id["16QAM-400"]["spectral_efficiency"] == pytest.approx(5.33, abs=0.01)
    assert by_id["SSB-PAM4-100"]["spectral_efficiency"] == pytest.approx(1.33, abs=0.01)
    assert by_id["DP-QPSK-100"]["reach_km"] > by_id["PAM4-112"]["reach_km"]
    caps = [r["capacity_cl_tbps"] or -1 for r in rows]
    assert caps == sorted(caps, reverse=True)


def test_compare_table(capsys):
    code, out, _ = run(capsys, "compare", SCENARIO)
    assert code == 0
    line = next(l for l in out.splitlines() if l.startswith("16QAM-400"))
    assert "5.33" in line and "25.60" in line and "51.20" in line


def test_compare_empty_filter(capsys):
    code, _, err = run(capsys, "compare", SCENARIO, "--profiles", "PAM4-112", "--detection", "coherent")
    assert code == 1 and "no profiles" in err


def test_capacity_shows_naive_factor(capsys):
    code, out, _ = run(capsys, "capacity", SCENARIO, "16QAM-400")
    assert code == 0
    assert "reach penalty 6.0 km" in out and "x1.41" in out
    assert "total: 51.20 Tb/s" in out


def test_capacity_disallowed_band(capsys):
    code, _, err = run(capsys, "capacity", SCENARIO, "16QAM-400", "--bands", "O")
    assert code == 1 and "not allowed" in err


def test_budget_command(capsys):
    code, doc = run_json(capsys, "budget", SCENARIO, "--profile", "PAM4-112")
    assert code == 0
    assert doc["budget"]["achievable_osnr"] == pytest.approx(31.95, abs=0.01)
    assert doc["osnr_limited_reach_km"] == pytest.approx(95.8, abs=0.05)
    code, doc = run_json(capsys, "budget", SCENARIO, "--channels", "200")
    assert code == 2 and doc["power"]["ok"] is False


def test_cd_sweep_limit(capsys):
    code, out, _ = run(capsys, "cd-sweep", "--baud", "56", "--criterion-db", "2")
    assert code == 0
    summary = out.strip().splitlines()[-1]
    limit = float(summary.split()[2])
    assert 30 <= limit <= 80
    assert out.startswith("acc_cd_ps_nm,worst_penalty_db")


def test_cd_sweep_needs_points(capsys):
    code, _, err = run(capsys, "cd-sweep", "--baud", "56", "--points", "0")
    assert code == 1 and "need at least 2 sweep points" in err


def test_cd_sweep_unreachable(capsys):
    code, _, err = run(capsys, "cd-sweep", "--points", "3", "--max-cd", "5", "--search-bound", "5")
    assert code == 2 and "criterion unreachable" in err


def test_cd_sweep_csv_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert run(capsys, "--seed", "11", "cd-sweep", "--points", "5", "--max-cd", "40", "--out", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "acc_cd_ps_nm,worst_penalty_db"
