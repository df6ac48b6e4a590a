import csv
import io as stdio
import json

import numpy as np
import pytest

from storefleet import io
from storefleet.engine import simulate
from storefleet.model import Fleet, FleetState, StepSignal, Store
from storefleet.policies import GGDDF
from storefleet.transforms import store_transform

from conftest import example1_fleet, example1_signal


def test_parse_fleet_defaults():
    fl, st = io.parse_fleet('{"stores": [{"id": "a", "capacity_mwh": 4, "max_discharge_mw": 2}]}')
    (s,) = fl.stores
    assert (s.max_charge, s.efficiency) == (0.0, 1.0)
    assert st.energies.tolist() == [4.0]


@pytest.mark.parametrize(
    "text, line, msg",
    [
        ("", 1, "invalid JSON"),
        ('{"stores": []}', 1, "no stores"),
        ('{"stores": [\n {"id": "a", "capacity_mwh": 4}\n]}', 2, "missing max_discharge_mw"),
        ('{"stores": [\n {"id": "a", "capacity_mwh": 4, "max_discharge_mw": 1},\n {"id": "b", "capacity_mwh": "x", "max_discharge_mw": 1}\n]}', 3, "capacity_mwh must be a number"),
        ('{"stores": [\n {"id": "a", "capacity_mwh": 4, "max_discharge_mw": 1, "colour": 1}\n]}', 2, "unknown field"),
        ('{"stores": [{"id": "a", "capacity_mwh": 4, "max_discharge_mw": 1}, {"id": "a", "capacity_mwh": 4, "max_discharge_mw": 1}]}', 1, "unique"),
    ],
)
def test_fleet_errors_carry_line(text, line, msg):
    with pytest.raises(io.InputError, match=msg) as exc:
        io.parse_fleet(text, "f.json")
    assert exc.value.line == line
    assert str(exc.value).startswith(f"f.json:{line}:")


def test_parse_signal():
    sig = io.parse_signal("time_h,demand_mw\n0,200\n2,500\n3,100\n4,\n")
    np.testing.assert_array_equal(sig.breakpoints, [0, 2, 3, 4])
    np.testing.assert_array_equal(sig.values, [200, 500, 100])


@pytest.mark.parametrize(
    "text, line, msg",
    [
        ("", 1, "empty"),
        ("t,d\n0,1\n1,0\n", 1, "header"),
        ("time_h,demand_mw\n0,1\n", 1, "closing horizon"),
        ("time_h,demand_mw\n1,1\n2,0\n", 2, "first time must be 0"),
        ("time_h,demand_mw\n0,1\n2,3\n2,0\n", 4, "strictly increasing"),
        ("time_h,demand_mw\n0,abc\n2,0\n", 2, "demand_mw must be a number"),
        ("time_h,demand_mw\n0,1,2\n2,0\n", 2, "2 columns"),
        ("time_h,demand_mw\n0,inf\n2,0\n", 2, "finite"),
    ],
)
def test_signal_errors_carry_line(text, line, msg):
    with pytest.raises(io.InputError, match=msg) as exc:
        io.parse_signal(text, "s.csv")
    assert exc.value.line == line


def test_missing_file(tmp_path):
    with pytest.raises(io.InputError):
        io.read_fleet(tmp_path / "nope.json")


def test_round_trip(tmp_path):
    fl = Fleet([Store("a", 2.5, 1.0, 0.5, 0.85), Store("b", 1 / 3, 0.1, 0.0, 1.0)])
    st = FleetState(0, [1.25, 0.1])
    sig = StepSignal([0, 0.5, 1.75], [0.3, -0.1])
    io.write_instance(tmp_path, fl, st, sig, {"note": np.float64(1.5)})
    fl2, st2, sig2 = io.read_instance(tmp_path)
    assert fl2 == fl
    assert st2.energies.tolist() == st.energies.tolist()
    assert sig2.breakpoints.tolist() == sig.breakpoints.tolist()
    assert sig2.values.tolist() == sig.values.tolist()
    assert json.loads((tmp_path / "meta.json").read_text()) == {"note": 1.5}


def test_trajectory_csv():
    fl = example1_fleet()
    traj, rep = simulate(fl, fl.full_state(), example1_signal(), GGDDF)
    rows = list(csv.DictReader(stdio.StringIO(io.trajectory_to_csv(traj))))
    assert list(rows[0]) == ["time_h", "store_id", "energy_mwh", "rate_mw", "cum_unserved_mwh", "cum_spilled_mwh"]
    assert len(rows) == len(traj.times) * 5
    last = rows[-5:]
    assert all(float(r["time_h"]) == 4.0 and float(r["rate_mw"]) == 0.0 for r in last)
    assert float(last[0]["cum_unserved_mwh"]) == pytest.approx(100)
    d = io.report_to_dict(rep, fl.ids)
    assert d["total_unserved"] == pytest.approx(100) and d["first_failure_time"] == 3.0
    assert d["store_ids"] == ["1", "2", "3", "4", "5"]


def test_transform_csv():
    fl = example1_fleet()
    text = io.transform_to_csv(store_transform(fl, fl.full_state()))
    assert text.splitlines()[0] == "p_mw,e_mwh"
    assert text.splitlines()[1:] == ["0.0,900.0", "100.0,650.0", "300.0,250.0", "400.0,100.0", "500.0,0.0"]
