import csv
import json
import subprocess
import sys

import pytest

from storefleet.cli import main
from storefleet.fixtures import fixture_dir
from storefleet.io import read_instance
from storefleet.oracle.instances import Instance
from storefleet.oracle.suite import Failure, save_counterexample


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def values(out):
    return dict(line.split(" ", 1) for line in out.strip().splitlines())


def test_simulate_example1(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--fixture", "example1", "--out", str(tmp_path))
    assert code == 0
    v = values(out)
    assert float(v["total_unserved"]) == pytest.approx(100)
    assert float(v["first_failure_time"]) == 3.0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["total_unserved"] == pytest.approx(100)
    with open(tmp_path / "trajectory.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 25


def test_simulate_priority_asc(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--fixture", "example1", "--policy", "priority:asc", "--out", str(tmp_path))
    assert code == 0 and float(values(out)["total_unserved"]) > 100


def test_simulate_from_files_and_horizon(capsys, tmp_path):
    d = fixture_dir("example1")
    code, out, _ = run(
        capsys, "simulate", "--fleet", str(d / "fleet.json"), "--signal", str(d / "signal.csv"),
        "--horizon", "3", "--out", str(tmp_path),
    )
    assert code == 0 and float(values(out)["total_unserved"]) == 0.0
    code, _, err = run(capsys, "simulate", "--fixture", "example1", "--horizon", "9", "--out", str(tmp_path))
    assert code == 2 and "horizon" in err


def test_empty_fleet_is_input_error(capsys, tmp_path):
    (tmp_path / "fleet.json").write_text('{"stores": []}')
    (tmp_path / "signal.csv").write_text("time_h,demand_mw\n0,1\n1,0\n")
    code, _, err = run(
        capsys, "simulate", "--fleet", str(tmp_path / "fleet.json"), "--signal", str(tmp_path / "signal.csv"),
        "--out", str(tmp_path),
    )
    assert code == 2 and "no stores" in err


def test_invalid_store_is_input_error(capsys, tmp_path):
    (tmp_path / "fleet.json").write_text('{"stores": [{"id": "a", "capacity_mwh": 1, "max_discharge_mw": 1, "efficiency": 1.2}]}')
    (tmp_path / "signal.csv").write_text("time_h,demand_mw\n0,1\n1,0\n")
    code, _, err = run(
        capsys, "simulate", "--fleet", str(tmp_path / "fleet.json"), "--signal", str(tmp_path / "signal.csv"),
        "--out", str(tmp_path),
    )
    assert code == 2 and "efficiency out of (0,1]" in err


def test_policy_error_exit_3(capsys, tmp_path):
    (tmp_path / "fleet.json").write_text(
        '{"stores": [{"id": "a", "capacity_mwh": 1, "max_discharge_mw": 1, "max_charge_mw": 1, "efficiency": 0.9},'
        ' {"id": "b", "capacity_mwh": 1, "max_discharge_mw": 1, "max_charge_mw": 1, "efficiency": 0.8}]}'
    )
    (tmp_path / "signal.csv").write_text("time_h,demand_mw\n0,-1\n1,0\n")
    code, _, err = run(
        capsys, "simulate", "--fleet", str(tmp_path / "fleet.json"), "--signal", str(tmp_path / "signal.csv"),
        "--policy", "combined", "--out", str(tmp_path),
    )
    assert code == 3 and "efficiency" in err


def test_transform_example1(capsys, tmp_path):
    code, out, _ = run(capsys, "transform", "--fixture", "example1", "--out", str(tmp_path))
    assert code == 0
    v = values(out)
    assert float(v["max_gap"]) == pytest.approx(100) and float(v["argmax_p"]) == 0.0
    rows = (tmp_path / "store_transform.csv").read_text().splitlines()
    assert rows == ["p_mw,e_mwh", "0.0,900.0", "100.0,650.0", "300.0,250.0", "400.0,100.0", "500.0,0.0"]
    rows = (tmp_path / "demand_transform.csv").read_text().splitlines()
    assert rows == ["p_mw,e_mwh", "0.0,1000.0", "100.0,600.0", "200.0,300.0", "500.0,0.0"]


def test_transform_example2_and_zero_demand(capsys, tmp_path):
    code, out, _ = run(capsys, "transform", "--fixture", "example-cc", "--out", str(tmp_path))
    v = values(out)
    assert code == 0 and float(v["max_gap"]) == pytest.approx(2) and float(v["argmax_p"]) == pytest.approx(1)
    (tmp_path / "zero.csv").write_text("time_h,demand_mw\n0,0\n4,0\n")
    code, out, _ = run(
        capsys, "transform", "--fleet", str(fixture_dir("example1") / "fleet.json"), "--signal",
        str(tmp_path / "zero.csv"), "--out", str(tmp_path),
    )
    assert code == 0 and float(values(out)["max_gap"]) == 0.0


def test_transform_at_later_time(capsys, tmp_path):
    code, out, _ = run(capsys, "transform", "--fixture", "example1", "--at", "3", "--out", str(tmp_path))
    assert code == 0 and float(values(out)["max_gap"]) == pytest.approx(100)


def test_minunserved(capsys):
    code, out, _ = run(capsys, "minunserved", "--fixture", "example-cc", "--oracle")
    v = values(out)
    assert code == 0 and float(v["min_unserved"]) == pytest.approx(2) and float(v["oracle_min_unserved"]) == pytest.approx(2)
    code, out, _ = run(capsys, "minunserved", "--fixture", "example-cc", "--oracle", "--cross-charging")
    assert float(values(out)["oracle_min_unserved"]) == pytest.approx(0, abs=1e-7)


def test_compare(capsys, tmp_path):
    code, out, _ = run(capsys, "compare", "--fixture", "example1", "--out", str(tmp_path))
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].split() == ["policy", "unserved_mwh", "first_failure_h", "spilled_mwh"]
    table = {l.split()[0]: l.split()[1:] for l in lines[1:]}
    assert float(table["ggddf"][0]) == pytest.approx(100)
    assert float(table["priority:asc"][0]) > 100 and float(table["priority:desc"][0]) > 100
    assert (tmp_path / "compare.csv").exists()


def test_verify_suite(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--theorem", "1", "--trials", "30", "--seed", "7", "--out", str(tmp_path))
    assert code == 0 and "30 passed, 0 failed" in out


def test_verify_hypothesis_error(capsys):
    code, _, err = run(capsys, "verify", "--theorem", "2", "--fixture", "example-cc")
    assert code == 2 and "hypothesis error" in err


def test_verify_fixture_and_replay(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--theorem", "5", "--fixture", "theorem5-fleet")
    assert code == 0 and "pass" in out
    inst = Instance(*read_instance(fixture_dir("example1")))
    save_counterexample(tmp_path / "cx", "1", Failure(0, {}, inst))
    code, out, _ = run(capsys, "verify", "--theorem", "1", "--replay", str(tmp_path / "cx"))
    assert code == 0 and "theorem 1: pass" in out


def test_unknown_theorem(capsys):
    code, _, err = run(capsys, "verify", "--theorem", "7")
    assert code == 2


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "storefleet.cli", "compare", "--fixture", "example1"], capture_output=True, text=True)
    assert r.returncode == 0 and "ggddf" in r.stdout
