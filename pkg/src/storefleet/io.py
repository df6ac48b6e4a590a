"""File formats: fleet config (JSON), demand signal and trajectory CSVs.

Fleet config::

    {"stores": [{"id": "a", "capacity_mwh": 100, "max_discharge_mw": 50,
                 "max_charge_mw": 0, "efficiency": 1.0, "initial_mwh": 100}]}

``max_charge_mw`` defaults to 0, ``efficiency`` to 1 and ``initial_mwh`` to
the capacity (a full store).

Signal CSV has header ``time_h,demand_mw``. Each row starts a segment held
until the next row's time, and the last row marks the horizon; its demand
value is ignored.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .engine import DispatchTrajectory, SimReport
from .model import Fleet, FleetState, StepSignal, Store
from .transforms import PwlConvex

STORE_FIELDS = ("id", "capacity_mwh", "max_discharge_mw", "max_charge_mw", "efficiency")


class InputError(ValueError):
    """Malformed input file; the message starts with ``path:line``."""

    def __init__(self, path, line, message):
        self.path, self.line = str(path), line
        where = f"{path}:{line}" if line else str(path)
        super().__init__(f"{where}: {message}")


def _number(value, path, line, name) -> float:
    if isinstance(value, bool):
        raise InputError(path, line, f"{name} must be a number")
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise InputError(path, line, f"{name} must be a number, got {value!r}") from None
    if not math.isfinite(x):
        raise InputError(path, line, f"{name} must be finite")
    return x


def _object_lines(text: str) -> list[int]:
    """Line numbers of the store objects (they are flat, so each ``{`` opens one)."""
    pos = text.find("[", max(text.find('"stores"'), 0))
    lines = []
    while pos >= 0:
        pos = text.find("{", pos + 1)
        if pos >= 0:
            lines.append(text.count("\n", 0, pos) + 1)
    return lines


def parse_fleet(text: str, path="<fleet>") -> tuple[Fleet, FleetState]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(path, exc.lineno, f"invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("stores"), list):
        raise InputError(path, 1, 'expected an object with a "stores" list')
    if not doc["stores"]:
        raise InputError(path, 1, "fleet has no stores")
    stores, initial = [], []
    starts = _object_lines(text)
    for n, entry in enumerate(doc["stores"]):
        line = starts[n] if n < len(starts) else 0
        if not isinstance(entry, dict):
            raise InputError(path, line, f"store #{n} must be an object")
        unknown = set(entry) - set(STORE_FIELDS) - {"initial_mwh"}
        if unknown:
            raise InputError(path, line, f"store #{n}: unknown field(s) {sorted(unknown)}")
        for key in ("id", "capacity_mwh", "max_discharge_mw"):
            if key not in entry:
                raise InputError(path, line, f"store #{n}: missing {key}")
        sid = str(entry["id"])
        cap = _number(entry["capacity_mwh"], path, line, "capacity_mwh")
        store = Store(
            sid,
            cap,
            _number(entry["max_discharge_mw"], path, line, "max_discharge_mw"),
            _number(entry.get("max_charge_mw", 0.0), path, line, "max_charge_mw"),
            _number(entry.get("efficiency", 1.0), path, line, "efficiency"),
        )
        stores.append(store)
        initial.append(_number(entry.get("initial_mwh", cap), path, line, "initial_mwh"))
    ids = [s.id for s in stores]
    if len(set(ids)) != len(ids):
        raise InputError(path, 1, "store ids must be unique")
    return Fleet(stores), FleetState(0.0, np.array(initial))


def read_fleet(path) -> tuple[Fleet, FleetState]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(path, 0, exc.strerror or str(exc)) from None
    return parse_fleet(text, path)


def fleet_to_dict(fleet: Fleet, state: FleetState | None = None) -> dict:
    rows = []
    for i, s in enumerate(fleet):
        row = {
            "id": s.id,
            "capacity_mwh": s.capacity,
            "max_discharge_mw": s.max_discharge,
            "max_charge_mw": s.max_charge,
            "efficiency": s.efficiency,
        }
        if state is not None:
            row["initial_mwh"] = float(state.energies[i])
        rows.append(row)
    return {"stores": rows}


def write_fleet(path, fleet: Fleet, state: FleetState | None = None) -> None:
    Path(path).write_text(json.dumps(fleet_to_dict(fleet, state), indent=2) + "\n")


def parse_signal(text: str, path="<signal>") -> StepSignal:
    rows = list(csv.reader(text.splitlines()))
    lines = [(i + 1, r) for i, r in enumerate(rows) if r and any(c.strip() for c in r)]
    if not lines:
        raise InputError(path, 1, "empty signal file")
    first_line, header = lines[0]
    if [c.strip() for c in header] != ["time_h", "demand_mw"]:
        raise InputError(path, first_line, "header must be time_h,demand_mw")
    data = lines[1:]
    if len(data) < 2:
        raise InputError(path, first_line, "need at least one segment and a closing horizon row")
    times, values = [], []
    for line, r in data:
        if len(r) != 2:
            raise InputError(path, line, f"expected 2 columns, got {len(r)}")
        t = _number(r[0].strip(), path, line, "time_h")
        if not times and t != 0.0:
            raise InputError(path, line, "first time must be 0")
        if times and t <= times[-1]:
            raise InputError(path, line, "times must be strictly increasing")
        times.append(t)
        values.append(_number(r[1].strip(), path, line, "demand_mw") if r[1].strip() else 0.0)
    return StepSignal(np.array(times), np.array(values[:-1]))


def read_signal(path) -> StepSignal:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(path, 0, exc.strerror or str(exc)) from None
    return parse_signal(text, path)


def _fmt(x: float) -> str:
    return repr(float(x))


def signal_to_csv(signal: StepSignal) -> str:
    out = ["time_h,demand_mw"]
    for t, v in zip(signal.breakpoints[:-1], signal.values):
        out.append(f"{_fmt(t)},{_fmt(v)}")
    out.append(f"{_fmt(signal.horizon)},0")
    return "\n".join(out) + "\n"


def write_signal(path, signal: StepSignal) -> None:
    Path(path).write_text(signal_to_csv(signal))


def trajectory_to_csv(traj: DispatchTrajectory) -> str:
    """Long format: one row per (event time, store). Rates hold until the next event."""
    out = ["time_h,store_id,energy_mwh,rate_mw,cum_unserved_mwh,cum_spilled_mwh"]
    K = traj.n_intervals
    for k, t in enumerate(traj.times):
        for i, sid in enumerate(traj.store_ids):
            rate = traj.rates[k, i] if k < K else 0.0
            out.append(
                ",".join(
                    [
                        _fmt(t),
                        str(sid),
                        _fmt(traj.energies[k, i]),
                        _fmt(rate),
                        _fmt(traj.cum_unserved[k]),
                        _fmt(traj.cum_spilled[k]),
                    ]
                )
            )
    return "\n".join(out) + "\n"


def write_trajectory(path, traj: DispatchTrajectory) -> None:
    Path(path).write_text(trajectory_to_csv(traj))


def report_to_dict(rep: SimReport, store_ids) -> dict:
    d = rep.as_dict()
    d["store_ids"] = [str(s) for s in store_ids]
    return d


def write_report(path, rep: SimReport, store_ids) -> None:
    Path(path).write_text(json.dumps(report_to_dict(rep, store_ids), indent=2) + "\n")


def transform_to_csv(tf: PwlConvex) -> str:
    out = ["p_mw,e_mwh"]
    out += [f"{_fmt(p)},{_fmt(e)}" for p, e in zip(tf.p, tf.e)]
    return "\n".join(out) + "\n"


def write_instance(directory, fleet: Fleet, state: FleetState, signal: StepSignal, meta: dict | None = None) -> Path:
    """Write ``fleet.json`` + ``signal.csv`` (+ ``meta.json``) for replay."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_fleet(directory / "fleet.json", fleet, state)
    write_signal(directory / "signal.csv", signal)
    if meta is not None:
        (directory / "meta.json").write_text(json.dumps(meta, indent=2, default=_jsonable) + "\n")
    return directory


def read_instance(directory) -> tuple[Fleet, FleetState, StepSignal]:
    directory = Path(directory)
    fleet, state = read_fleet(directory / "fleet.json")
    return fleet, state, read_signal(directory / "signal.csv")


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    return str(o)
