"""Exact event-driven simulation of a policy against a step signal.

Rates are constant between events. Events are segment boundaries, a store
emptying or filling at its current rate, and two duration groups meeting;
all three are solved in closed form because durations move linearly in
time while the allocation is fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import EPS, Fleet, FleetState, StepSignal
from .policies import Policy, REVERSE_GGDDF, allocate, tracked_durations, GGDDF


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class DispatchTrajectory:
    """Per-interval rates and per-event states of one run.

    ``times`` has one more entry than ``rates``: interval ``k`` is
    ``[times[k], times[k + 1])`` and ``energies[k]`` is the state at its
    start. The last row of ``energies`` is the final state.
    """

    store_ids: tuple
    times: np.ndarray
    energies: np.ndarray
    rates: np.ndarray
    demand: np.ndarray
    served: np.ndarray
    unserved_rate: np.ndarray
    spilled_rate: np.ndarray
    cum_unserved: np.ndarray = field(repr=False)
    cum_spilled: np.ndarray = field(repr=False)

    @property
    def n_intervals(self) -> int:
        return len(self.rates)

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.times)

    def state(self, k: int) -> FleetState:
        return FleetState(self.times[k], self.energies[k])

    def state_at(self, t: float) -> FleetState:
        """Interpolated state at an arbitrary time inside the run."""
        if t <= self.times[0]:
            return self.state(0)
        if t >= self.times[-1]:
            return self.state(len(self.times) - 1)
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return FleetState(t, self.energies[k] - self.rates[k] * (t - self.times[k]))


@dataclass(frozen=True)
class SimReport:
    total_unserved: float
    total_spilled: float
    first_failure_time: float | None
    final_state: FleetState

    def as_dict(self) -> dict:
        return {
            "total_unserved": self.total_unserved,
            "total_spilled": self.total_spilled,
            "first_failure_time": self.first_failure_time,
            "final_time": self.final_state.time,
            "final_energies": self.final_state.energies.tolist(),
        }


def _meet_time(dur, rho, active, tol) -> float:
    """Earliest positive time at which two active durations become equal."""
    idx = np.nonzero(active)[0]
    if len(idx) < 2:
        return math.inf
    D = dur[idx]
    R = rho[idx]
    gap = D[:, None] - D[None, :]
    closing = R[:, None] - R[None, :]
    ok = (gap > tol) & (closing > 1e-12)
    if not ok.any():
        return math.inf
    return float((gap[ok] / closing[ok]).min())


def _next_event(policy, fleet, E, rates, d, tol) -> tuple[float, np.ndarray, np.ndarray]:
    cap = fleet.capacity
    with np.errstate(divide="ignore", invalid="ignore"):
        t_empty = np.where(rates > 0, E / np.where(rates > 0, rates, 1.0), math.inf)
        t_full = np.where(rates < 0, (cap - E) / np.where(rates < 0, -rates, 1.0), math.inf)
    tau = min(float(t_empty.min(initial=math.inf)), float(t_full.min(initial=math.inf)))
    tracked = tracked_durations(policy, fleet, FleetState(0.0, E), d, tol)
    if tracked is not None:
        dur, limits, active = tracked
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = np.where(limits > 0, np.abs(rates) / np.where(limits > 0, limits, 1.0), 0.0)
        tau = min(tau, _meet_time(dur, rho, active, tol))
    return tau, t_empty, t_full


def default_event_guard(fleet: Fleet, signal: StepSignal) -> int:
    return 10 * len(fleet) * len(signal) + 100


def _run_online(fleet, initial, signal, policy, T, tol, max_events):
    n = len(fleet)
    cap = fleet.capacity
    t = initial.time
    E = np.array(initial.energies, dtype=float)
    bps = signal.breakpoints
    times, energies, rates_log = [t], [E.copy()], []
    demand_log, served_log, uns_log, spill_log = [], [], [], []
    t_tol = 1e-12 * max(1.0, T)
    while T - t > t_tol:
        if len(rates_log) >= max_events:
            raise SimulationError(f"event guard of {max_events} events exceeded at t={t:g}")
        k = signal.segment_index(t)
        seg_end = min(float(bps[k + 1]), T)
        d = float(signal.values[k])
        alloc = allocate(policy, fleet, FleetState(t, E), d, tol)
        r = alloc.rates
        tau, t_empty, t_full = _next_event(policy, fleet, E, r, d, tol)
        hit_seg = tau >= seg_end - t
        tau = min(tau, seg_end - t)
        newE = E - r * tau
        # snap stores whose own emptying/filling event fired
        snap_band = 1e-12 * max(1.0, tau)
        newE[t_empty <= tau + snap_band] = 0.0
        full = t_full <= tau + snap_band
        newE[full] = cap[full]
        np.clip(newE, 0.0, cap, out=newE)
        t = seg_end if hit_seg or seg_end - (t + tau) <= t_tol else t + tau
        E = newE
        rates_log.append(r)
        demand_log.append(d)
        served_log.append(alloc.served)
        uns_log.append(alloc.unserved)
        spill_log.append(alloc.spilled)
        times.append(t)
        energies.append(E.copy())
    return _assemble(fleet, times, energies, rates_log, demand_log, served_log, uns_log, spill_log)


def _assemble(fleet, times, energies, rates, demand, served, uns, spill) -> DispatchTrajectory:
    n = len(fleet)
    times = np.asarray(times, dtype=float)
    dt = np.diff(times)
    uns = np.asarray(uns, dtype=float)
    spill = np.asarray(spill, dtype=float)
    return DispatchTrajectory(
        store_ids=tuple(fleet.ids),
        times=times,
        energies=np.asarray(energies, dtype=float).reshape(len(times), n),
        rates=np.asarray(rates, dtype=float).reshape(len(dt), n),
        demand=np.asarray(demand, dtype=float),
        served=np.asarray(served, dtype=float),
        unserved_rate=uns,
        spilled_rate=spill,
        cum_unserved=np.concatenate([[0.0], np.cumsum(uns * dt)]),
        cum_spilled=np.concatenate([[0.0], np.cumsum(spill * dt)]),
    )


def report(traj: DispatchTrajectory, tol: float = EPS) -> SimReport:
    dt = traj.dt
    total_u = math.fsum((traj.unserved_rate * dt).tolist())
    total_s = math.fsum((traj.spilled_rate * dt).tolist())
    fails = np.nonzero((traj.unserved_rate > tol * np.maximum(1.0, np.abs(traj.demand))) & (dt > 0))[0]
    first = float(traj.times[fails[0]]) if len(fails) else None
    if first is None:
        total_u = 0.0
    return SimReport(total_u, total_s, first, traj.state(len(traj.times) - 1))


def reverse_ggddf_plan(
    fleet: Fleet, state: FleetState, signal: StepSignal, T: float | None = None, tol: float = EPS
) -> DispatchTrajectory:
    """Offline plan: run GGDDF on the time-reversed signal and play it backwards."""
    T = signal.horizon if T is None else T
    if state.time != 0.0:
        raise ValueError("reverse plan starts at time 0")
    sig = signal.truncate(T)
    if np.any(sig.values < 0):
        raise ValueError("reverse-ggddf needs a nonnegative signal")
    fwd = _run_online(fleet, state, sig.reversed(), GGDDF, T, tol, default_event_guard(fleet, sig))
    K = fwd.n_intervals
    times = T - fwd.times[::-1]
    times[0], times[-1] = 0.0, T
    E0 = state.energies
    # E(t) = E(0) - [E*(T - t) - E*(T)] keeps every store inside [0, E(0)]
    energies = E0[None, :] - fwd.energies[::-1] + fwd.energies[-1][None, :]
    energies = np.clip(energies, 0.0, fleet.capacity)
    rev = slice(K - 1, None, -1) if K else slice(0, 0)
    return _assemble(
        fleet,
        times,
        energies,
        fwd.rates[rev],
        fwd.demand[rev],
        fwd.served[rev],
        fwd.unserved_rate[rev],
        fwd.spilled_rate[rev],
    )


def simulate(
    fleet: Fleet,
    initial: FleetState,
    signal: StepSignal,
    policy: Policy,
    T: float | None = None,
    tol: float = EPS,
    max_events: int | None = None,
) -> tuple[DispatchTrajectory, SimReport]:
    """Run ``policy`` from ``initial`` to ``T`` (default: signal horizon)."""
    T = signal.horizon if T is None else float(T)
    if T > signal.horizon + tol:
        raise ValueError(f"horizon {T} beyond signal end {signal.horizon}")
    if T < initial.time:
        raise ValueError("horizon precedes the initial state")
    initial.check(fleet, tol)
    policy.check(fleet)
    if policy.kind == "reverse-ggddf":
        traj = reverse_ggddf_plan(fleet, initial, signal, T, tol)
    else:
        guard = default_event_guard(fleet, signal) if max_events is None else max_events
        traj = _run_online(fleet, initial, signal, policy, T, tol, guard)
    return traj, report(traj, tol)


def trajectories_match(a: DispatchTrajectory, b: DispatchTrajectory, tol: float = EPS) -> bool:
    if a.times.shape != b.times.shape:
        return False
    return bool(
        np.allclose(a.times, b.times, rtol=0, atol=tol)
        and np.allclose(a.energies, b.energies, rtol=0, atol=tol)
        and np.allclose(a.rates, b.rates, rtol=0, atol=tol)
    )


def simulate_prefix_equivalence(
    fleet: Fleet,
    initial: FleetState,
    signal: StepSignal,
    policy: Policy,
    t_split: float,
    tol: float = EPS,
) -> bool:
    """Whether the full run restricted to ``[0, t_split]`` equals the truncated-signal run."""
    if not policy.online:
        raise ValueError(f"prefix equivalence needs an online policy, got {policy.kind!r}")
    full, _ = simulate(fleet, initial, signal, policy, tol=tol)
    pre, _ = simulate(fleet, initial, signal.truncate(t_split), policy, tol=tol)
    cut = full.times[:-1] < t_split - tol
    k = int(cut.sum())
    if pre.n_intervals != k:
        return False
    ok = (
        np.allclose(full.times[:k], pre.times[:-1], rtol=0, atol=tol)
        and np.allclose(full.energies[:k], pre.energies[:-1], rtol=0, atol=tol)
        and np.allclose(full.rates[:k], pre.rates, rtol=0, atol=tol)
    )
    end = full.state_at(t_split).energies
    scale = tol * max(1.0, float(np.abs(end).max(initial=0.0)))
    return bool(ok and np.allclose(end, pre.energies[-1], rtol=0, atol=scale))
