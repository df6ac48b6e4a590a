"""Discrete-time dispatch problems solved as linear programs.

On a uniform grid whose steps align with the breakpoints of a step signal
the discrete problem has the same optimum as the continuous one: averaging
any continuous policy over each step preserves every (linear) constraint
and the served energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..model import EPS, Fleet, FleetState, StepSignal
from .simplex import LPError, LPResult, linprog

MIN_UNSERVED = "min_unserved"
FEASIBILITY = "feasibility"
MAX_FINAL_ENERGY = "max_final_energy"
OBJECTIVES = (MIN_UNSERVED, FEASIBILITY, MAX_FINAL_ENERGY)

DEFAULT_SIZE_LIMIT = 400


class OracleSizeError(ValueError):
    pass


@dataclass(frozen=True)
class GridProblem:
    """Dispatch LP on ``n_steps`` steps of length ``dt``.

    ``FEASIBILITY`` and ``MAX_FINAL_ENERGY`` require every positive-demand step
    to be served in full; ``MAX_FINAL_ENERGY`` then maximises the final
    energy held by the stores in ``subset``. ``final_energy_min`` adds
    per-store lower bounds on the final energies.
    """

    fleet: Fleet
    initial: FleetState
    demand: np.ndarray
    dt: float
    cross_charging: bool = False
    objective: str = MIN_UNSERVED
    subset: tuple[int, ...] | None = None
    final_energy_min: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "demand", np.asarray(self.demand, dtype=float))
        if self.objective not in OBJECTIVES:
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    @property
    def n_steps(self) -> int:
        return len(self.demand)

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    @classmethod
    def from_signal(
        cls,
        fleet: Fleet,
        initial: FleetState,
        signal: StepSignal,
        dt: float | None = None,
        T: float | None = None,
        **kw,
    ) -> "GridProblem":
        T = signal.horizon if T is None else T
        sig = signal.truncate(T)
        dt = aligned_step(sig.breakpoints) if dt is None else dt
        n = int(round(T / dt))
        if abs(n * dt - T) > EPS * max(1.0, T):
            raise ValueError(f"dt={dt} does not divide horizon {T}")
        mids = (np.arange(n) + 0.5) * dt
        for b in sig.breakpoints:
            if abs(round(b / dt) * dt - b) > EPS * max(1.0, b):
                raise ValueError(f"breakpoint {b} is not on the dt={dt} grid")
        return cls(fleet, initial, [sig(t) for t in mids], dt, **kw)


def aligned_step(breakpoints, max_denominator: int = 10_000) -> float:
    """Largest step that divides every breakpoint (breakpoints read as rationals)."""
    fr = [Fraction(float(b)).limit_denominator(max_denominator) for b in breakpoints]
    den = 1
    for f in fr:
        den = den * f.denominator // math.gcd(den, f.denominator)
    num = 0
    for f in fr:
        num = math.gcd(num, int(f * den))
    return num / den


@dataclass(frozen=True)
class OracleSolution:
    status: str
    objective_value: float | None
    discharge: np.ndarray | None = field(default=None, repr=False)
    charge: np.ndarray | None = field(default=None, repr=False)
    energies: np.ndarray | None = field(default=None, repr=False)
    lp: LPResult | None = field(default=None, repr=False)

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    @property
    def rates(self) -> np.ndarray | None:
        if self.discharge is None:
            return None
        return self.discharge - self.charge

    @property
    def final_energies(self) -> np.ndarray | None:
        return None if self.energies is None else self.energies[-1]

    @property
    def max_overlap(self) -> float:
        """Largest simultaneous charge and discharge of one store in one step."""
        if self.discharge is None:
            return 0.0
        return float(np.minimum(self.discharge, self.charge).max(initial=0.0))


class _Layout:
    """Column indices of the discharge/charge variables."""

    def __init__(self, problem: GridProblem):
        fl = problem.fleet
        N, m = problem.n_steps, len(fl)
        d = problem.demand
        cross = problem.cross_charging
        self.x = -np.ones((N, m), dtype=int)
        self.y = -np.ones((N, m), dtype=int)
        col = 0
        pc = fl.max_charge
        for k in range(N):
            for i in range(m):
                if cross or d[k] >= 0:
                    self.x[k, i] = col
                    col += 1
                if pc[i] > 0 and (cross or d[k] < 0):
                    self.y[k, i] = col
                    col += 1
        self.n = col


def _build(problem: GridProblem, lay: _Layout):
    fl = problem.fleet
    N, m, n = problem.n_steps, len(fl), lay.n
    dt = problem.dt
    d = problem.demand
    P, Pc, cap, eta = fl.max_discharge, fl.max_charge, fl.capacity, fl.efficiency
    E0 = problem.initial.energies
    full_service = problem.objective != MIN_UNSERVED
    ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []

    def row():
        return np.zeros(n)

    ub = np.full(n, np.inf)
    for k in range(N):
        for i in range(m):
            if lay.x[k, i] >= 0:
                ub[lay.x[k, i]] = P[i]
            if lay.y[k, i] >= 0:
                ub[lay.y[k, i]] = Pc[i]
    for j in range(n):
        r = row()
        r[j] = 1.0
        ub_rows.append(r)
        ub_rhs.append(ub[j])

    for i in range(m):
        drain = row()
        for k in range(N):
            if lay.x[k, i] >= 0:
                drain[lay.x[k, i]] = dt
            if lay.y[k, i] >= 0:
                drain[lay.y[k, i]] = -dt
            has_x = (lay.x[: k + 1, i] >= 0).any()
            has_y = (lay.y[: k + 1, i] >= 0).any()
            if has_x:
                ub_rows.append(drain.copy())
                ub_rhs.append(E0[i])
            if has_y:
                ub_rows.append(-drain)
                ub_rhs.append(cap[i] - E0[i])
        if problem.final_energy_min is not None:
            ub_rows.append(drain.copy())
            ub_rhs.append(E0[i] - problem.final_energy_min[i])

    for k in range(N):
        net = row()
        for i in range(m):
            if lay.x[k, i] >= 0:
                net[lay.x[k, i]] = 1.0
            if lay.y[k, i] >= 0:
                net[lay.y[k, i]] = -1.0 / eta[i]
        if not net.any():
            if full_service and d[k] > 0:
                # nothing can serve this step
                eq_rows.append(net)
                eq_rhs.append(d[k])
            continue
        if d[k] >= 0 and full_service:
            eq_rows.append(net)
            eq_rhs.append(d[k])
            continue
        ub_rows.append(net)
        ub_rhs.append(max(d[k], 0.0))
        if (lay.y[k] >= 0).any():
            ub_rows.append(-net)
            ub_rhs.append(-min(d[k], 0.0))

    c = np.zeros(n)
    if problem.objective == MIN_UNSERVED:
        for k in range(N):
            if d[k] > 0:
                for i in range(m):
                    if lay.x[k, i] >= 0:
                        c[lay.x[k, i]] -= dt
                    if lay.y[k, i] >= 0:
                        c[lay.y[k, i]] += dt / eta[i]
    elif problem.objective == MAX_FINAL_ENERGY:
        subset = range(m) if problem.subset is None else problem.subset
        for i in subset:
            for k in range(N):
                if lay.x[k, i] >= 0:
                    c[lay.x[k, i]] += dt
                if lay.y[k, i] >= 0:
                    c[lay.y[k, i]] -= dt
    return c, np.array(ub_rows).reshape(-1, n), np.array(ub_rhs), np.array(eq_rows).reshape(-1, n), np.array(eq_rhs)


def solve(
    problem: GridProblem, size_limit: int = DEFAULT_SIZE_LIMIT, rule: str = "bland"
) -> OracleSolution:
    """Solve the grid LP exactly (to simplex tolerance)."""
    fl = problem.fleet
    N, m = problem.n_steps, len(fl)
    if N * m > size_limit:
        raise OracleSizeError(f"{N} steps x {m} stores exceeds the oracle limit of {size_limit}")
    d = problem.demand
    lay = _Layout(problem)
    c, A_ub, b_ub, A_eq, b_eq = _build(problem, lay)
    res = linprog(c, A_ub, b_ub, A_eq, b_eq, rule=rule)
    if res.status == "infeasible":
        return OracleSolution("infeasible", None, lp=res)
    if not res.ok:
        raise LPError(f"grid LP ended with status {res.status!r}")
    x = np.zeros((N, m))
    y = np.zeros((N, m))
    has_x, has_y = lay.x >= 0, lay.y >= 0
    x[has_x] = res.x[lay.x[has_x]]
    y[has_y] = res.x[lay.y[has_y]]
    E = problem.initial.energies[None, :] - problem.dt * np.concatenate(
        [np.zeros((1, m)), np.cumsum(x - y, axis=0)]
    )
    if problem.objective == MIN_UNSERVED:
        pos = d > 0
        net = x.sum(axis=1) - (y / fl.efficiency[None, :]).sum(axis=1)
        value = math.fsum((problem.dt * (d[pos] - net[pos])).tolist())
        value = max(value, 0.0)
    elif problem.objective == MAX_FINAL_ENERGY:
        subset = list(range(m)) if problem.subset is None else list(problem.subset)
        value = float(E[-1, subset].sum())
    else:
        value = 0.0
    return OracleSolution("feasible", value, x, y, E, res)


def check_solution(problem: GridProblem, sol: OracleSolution) -> float:
    """Largest violation of the physical grid constraints by ``sol``."""
    fl = problem.fleet
    x, y, E = sol.discharge, sol.charge, sol.energies
    d = problem.demand
    viol = [
        float(np.max(-x, initial=0)),
        float(np.max(-y, initial=0)),
        float(np.max(x - fl.max_discharge[None, :], initial=0)),
        float(np.max(y - fl.max_charge[None, :], initial=0)),
        float(np.max(-E, initial=0)),
        float(np.max(E - fl.capacity[None, :], initial=0)),
    ]
    net = x.sum(axis=1) - (y / fl.efficiency[None, :]).sum(axis=1)
    viol.append(float(np.max(net - np.maximum(d, 0), initial=0)))
    viol.append(float(np.max(np.minimum(d, 0) - net, initial=0)))
    if problem.objective != MIN_UNSERVED:
        pos = d >= 0
        viol.append(float(np.max(np.abs(net[pos] - d[pos]), initial=0)))
    if not problem.cross_charging:
        viol.append(float(np.max(y[d >= 0], initial=0)))
        viol.append(float(np.max(x[d < 0], initial=0)))
    if problem.final_energy_min is not None:
        viol.append(float(np.max(problem.final_energy_min - E[-1], initial=0)))
    return max(viol)
