"""Check the optimality theorems on concrete instances.

Each check runs the grid oracle (the stand-in for "any policy") together
with the simulator or a second oracle call, and reports whether the
theorem's implication holds on that instance. When the antecedent is false
the verdict passes and is marked vacuous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..engine import simulate
from ..model import EPS, Fleet, FleetState
from ..policies import COMBINED, GGDDF, REVERSE_GGDDF, priority
from ..transforms import demand_transform, min_unserved_energy, store_transform
from .grid import FEASIBILITY, MAX_FINAL_ENERGY, MIN_UNSERVED, GridProblem, solve
from .instances import Instance

THEOREMS = ("1", "2", "3", "4", "5", "c3", "2b")

SIM_TOL = 1e-6
LP_TOL = 1e-5
BALANCE_TOL = 1e-9
DOMINANCE_TOL = 1e-6


class HypothesisError(ValueError):
    """An instance does not satisfy a theorem's hypotheses."""


@dataclass
class Verdict:
    theorem: str
    passed: bool
    vacuous: bool = False
    details: dict = field(default_factory=dict)
    instance: Instance | None = field(default=None, repr=False)
    solutions: dict = field(default_factory=dict, repr=False)


@dataclass(frozen=True)
class Threshold:
    k: float
    u0: float
    s1: tuple[int, ...]
    s2: tuple[int, ...]


def theorem4_threshold(fleet: Fleet, state: FleetState, tol: float = EPS) -> Threshold:
    """Demand floor ``k``: total power of stores whose full duration exceeds the
    shortest discharge-duration among non-full stores."""
    E, cap, P = state.energies, fleet.capacity, fleet.max_discharge
    not_full = E < cap - tol * np.maximum(1.0, cap)
    u0 = float((E[not_full] / P[not_full]).min()) if not_full.any() else math.inf
    s1 = tuple(int(i) for i in np.nonzero(cap / P <= u0 + tol)[0])
    s2 = tuple(i for i in range(len(fleet)) if i not in s1)
    return Threshold(float(P[list(s2)].sum()), u0, s1, s2)


def _values(inst: Instance) -> np.ndarray:
    return inst.signal.values


def _require(cond: bool, what: str) -> None:
    if not cond:
        raise HypothesisError(what)


def _nonnegative(inst):
    _require(bool(np.all(_values(inst) >= 0)), "demand must be nonnegative")


def _decreasing(inst):
    _require(bool(np.all(np.diff(_values(inst)) <= 0)), "demand must be weakly decreasing")


def _increasing(inst):
    _require(bool(np.all(np.diff(_values(inst)) >= 0)), "demand must be weakly increasing")


def _unimodal(inst):
    v = _values(inst)
    dv = np.diff(v)
    first_down = np.argmax(dv < 0) if (dv < 0).any() else len(dv)
    _require(bool(np.all(dv[first_down:] <= 0)), "demand must be increasing then decreasing")


def _full_start(inst):
    cap = inst.fleet.capacity
    _require(
        bool(np.all(inst.initial.energies >= cap - EPS * np.maximum(1.0, cap))),
        "all stores must be full at time 0",
    )


def _proportional(inst, tol=1e-9):
    fl, E = inst.fleet, inst.initial.energies
    P, Pc, cap = fl.max_discharge, fl.max_charge, fl.capacity
    _require(float(np.ptp(cap / P)) <= tol, "capacity/power ratio must be equal across stores")
    alpha = Pc / P
    _require(bool(alpha.min() > 0) and float(np.ptp(alpha)) <= tol, "charge limits must be a common positive multiple of discharge limits")
    _require(float(np.ptp(fl.efficiency)) <= tol, "stores must share one efficiency")
    _require(float(np.ptp(E / P)) <= tol, "initial configuration must be balanced")


def check_hypotheses(theorem: str, inst: Instance) -> None:
    theorem = str(theorem).lower()
    if theorem not in THEOREMS:
        raise ValueError(f"unknown theorem {theorem!r}; expected one of {THEOREMS}")
    if theorem != "5":
        _nonnegative(inst)
    if theorem == "2":
        _decreasing(inst)
    elif theorem == "3":
        _increasing(inst)
        _full_start(inst)
    elif theorem == "c3":
        _unimodal(inst)
        _full_start(inst)
    elif theorem == "4":
        _increasing(inst)
        k = theorem4_threshold(inst.fleet, inst.initial).k
        _require(float(_values(inst)[0]) >= k - EPS, f"initial demand must be at least k={k:g}")
    elif theorem == "5":
        _proportional(inst)


def _grid(inst, **kw) -> GridProblem:
    return GridProblem.from_signal(inst.fleet, inst.initial, inst.signal, **kw)


def _theorem1(inst):
    traj, rep = simulate(inst.fleet, inst.initial, inst.signal, GGDDF)
    tf, p_star = min_unserved_energy(inst.fleet, inst.initial, inst.signal)
    lp = solve(_grid(inst, objective=MIN_UNSERVED))
    # the maximiser is the critical power of the GGDDF end state
    final = rep.final_state
    es_T = store_transform(inst.fleet, final)
    p_hat = float(es_T.p[np.nonzero(es_T.e <= EPS * max(1.0, float(es_T.e[0])))[0][0]])
    gap_at_p_hat = float(
        demand_transform(inst.signal, 0.0, inst.horizon)(p_hat) - store_transform(inst.fleet, inst.initial)(p_hat)
    )
    d = {
        "sim_unserved": rep.total_unserved,
        "transform_unserved": tf,
        "oracle_unserved": lp.objective_value,
        "argmax_p": p_star,
        "critical_power": p_hat,
        "gap_at_critical_power": gap_at_p_hat,
    }
    ok = (
        abs(rep.total_unserved - tf) <= SIM_TOL
        and abs(tf - lp.objective_value) <= LP_TOL
        and abs(max(gap_at_p_hat, 0.0) - tf) <= SIM_TOL
    )
    return ok, False, d, {"oracle": lp, "trajectory": traj}


def _cross_feasible(inst, **kw):
    return solve(_grid(inst, cross_charging=True, objective=FEASIBILITY, **kw))


def _ggddf_serves(inst, d, sols):
    traj, rep = simulate(inst.fleet, inst.initial, inst.signal, GGDDF)
    d["ggddf_unserved"] = rep.total_unserved
    sols["trajectory"] = traj
    return rep.total_unserved <= SIM_TOL


def _theorem2_like(inst):
    cross = _cross_feasible(inst)
    d = {"cross_feasible": cross.feasible}
    sols = {"cross": cross}
    if not cross.feasible:
        return True, True, d, sols
    return _ggddf_serves(inst, d, sols), False, d, sols


def _theorem3(inst):
    m = len(inst.fleet)
    subset = tuple(range(m)) if inst.subset is None else inst.subset
    cross = solve(_grid(inst, cross_charging=True, objective=MAX_FINAL_ENERGY, subset=subset))
    d = {"cross_feasible": cross.feasible, "subset": list(subset)}
    sols = {"cross": cross}
    if not cross.feasible:
        return True, True, d, sols
    target = cross.final_energies
    plain = solve(
        _grid(inst, cross_charging=False, objective=FEASIBILITY, final_energy_min=target - DOMINANCE_TOL)
    )
    sols["no_cross"] = plain
    d["cross_final"] = target.tolist()
    d["no_cross_feasible"] = plain.feasible
    if plain.feasible:
        d["no_cross_final"] = plain.final_energies.tolist()
    return plain.feasible, False, d, sols


def _theorem4(inst):
    thr = theorem4_threshold(inst.fleet, inst.initial)
    cross = _cross_feasible(inst)
    d = {"k": thr.k, "u0": thr.u0, "s1": list(thr.s1), "s2": list(thr.s2), "cross_feasible": cross.feasible}
    sols = {"cross": cross}
    if not cross.feasible:
        return True, True, d, sols
    plain = solve(_grid(inst, cross_charging=False, objective=FEASIBILITY))
    sols["no_cross"] = plain
    d["no_cross_feasible"] = plain.feasible
    served = _ggddf_serves(inst, d, sols)
    return plain.feasible and served, False, d, sols


def balance_spread(fleet: Fleet, energies: np.ndarray) -> float:
    """Largest spread of discharge-durations over rows of ``energies``."""
    dur = np.atleast_2d(energies) / fleet.max_discharge[None, :]
    return float(np.ptp(dur, axis=1).max())


def _theorem5(inst):
    traj, rep = simulate(inst.fleet, inst.initial, inst.signal, COMBINED)
    lp = solve(_grid(inst, cross_charging=True, objective=MIN_UNSERVED))
    spread = balance_spread(inst.fleet, traj.energies)
    d = {
        "combined_unserved": rep.total_unserved,
        "oracle_unserved": lp.objective_value,
        "max_duration_spread": spread,
    }
    ok = abs(rep.total_unserved - lp.objective_value) <= LP_TOL and spread <= BALANCE_TOL
    return ok, False, d, {"oracle": lp, "trajectory": traj}


def _corollary2b(inst):
    fl = inst.fleet
    _, g = simulate(fl, inst.initial, inst.signal, GGDDF)
    d = {"ggddf_first_failure": g.first_failure_time}
    if g.first_failure_time is None:
        return True, True, d, {}
    ok = True
    rivals = {
        "priority:asc": priority(fl, "asc"),
        "priority:desc": priority(fl, "desc"),
        "reverse-ggddf": REVERSE_GGDDF,
    }
    for name, pol in rivals.items():
        _, r = simulate(fl, inst.initial, inst.signal, pol)
        t = math.inf if r.first_failure_time is None else r.first_failure_time
        d[f"{name}_first_failure"] = r.first_failure_time
        ok &= g.first_failure_time >= t - EPS
    return ok, False, d, {}


_CHECKS = {
    "1": _theorem1,
    "2": _theorem2_like,
    "c3": _theorem2_like,
    "3": _theorem3,
    "4": _theorem4,
    "5": _theorem5,
    "2b": _corollary2b,
}


def verify_theorem(theorem, instance: Instance) -> Verdict:
    """Check one theorem on one instance; raises ``HypothesisError`` if it does not apply."""
    key = str(theorem).lower()
    check_hypotheses(key, instance)
    ok, vacuous, details, sols = _CHECKS[key](instance)
    return Verdict(key, bool(ok), vacuous, details, instance, sols)
