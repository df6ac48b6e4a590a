"""Structural checks on simulated trajectories.

Each function returns a violation count or magnitude so a property suite
can assert zero across many random runs.
"""

from __future__ import annotations

import numpy as np

from .engine import DispatchTrajectory, simulate_prefix_equivalence
from .model import EPS, Fleet, FleetState, StepSignal
from .policies import Policy
from .transforms import group_boundaries


def conservation_error(fleet: Fleet, traj: DispatchTrajectory) -> float:
    """Largest drift between logged energies and ``E(0) - integral of rates``, relative to capacity."""
    drained = np.concatenate([np.zeros((1, len(fleet))), np.cumsum(traj.rates * traj.dt[:, None], axis=0)])
    expect = traj.energies[0][None, :] - drained
    return float((np.abs(expect - traj.energies) / np.maximum(1.0, fleet.capacity)[None, :]).max())


def bound_violation(fleet: Fleet, traj: DispatchTrajectory) -> float:
    cap = fleet.capacity[None, :]
    r = traj.rates
    return float(
        max(
            np.max(-traj.energies, initial=0.0),
            np.max(traj.energies - cap, initial=0.0),
            np.max(r - fleet.max_discharge[None, :], initial=0.0),
            np.max(-fleet.max_charge[None, :] - r, initial=0.0),
        )
    )


def greedy_violations(fleet: Fleet, traj: DispatchTrajectory, tol: float = EPS) -> int:
    """Intervals where a discharge policy served less than ``min(d, live power)``."""
    live = traj.energies[:-1] > tol * np.maximum(1.0, fleet.capacity)[None, :]
    avail = (live * fleet.max_discharge[None, :]).sum(axis=1)
    want = np.minimum(np.maximum(traj.demand, 0.0), avail)
    return int((np.abs(traj.served - want) > tol * np.maximum(1.0, want)).sum())


def _pairwise_durations(fleet: Fleet, traj: DispatchTrajectory) -> np.ndarray:
    D = traj.energies / fleet.max_discharge[None, :]
    return D[:, :, None] - D[:, None, :]


def order_violations(fleet: Fleet, traj: DispatchTrajectory, tol: float = EPS) -> int:
    """Pairs whose discharge-duration order flips at some later event."""
    diff = _pairwise_durations(fleet, traj)
    later_min = np.minimum.accumulate(diff[::-1], axis=0)[::-1]
    return int(((diff > tol) & (later_min < -tol)).sum())


def coalescence_violations(fleet: Fleet, traj: DispatchTrajectory, tol: float = EPS) -> int:
    """Pairs with equal durations at some event that later separate."""
    gap = np.abs(_pairwise_durations(fleet, traj))
    later_max = np.maximum.accumulate(gap[::-1], axis=0)[::-1]
    return int(((gap <= tol) & (later_max > 10 * tol)).sum())


def pi_nesting_violations(fleet: Fleet, traj: DispatchTrajectory, tol: float = EPS) -> int:
    """Breakpoints present at a later event but missing at an earlier one."""
    sets = [group_boundaries(fleet, traj.state(k), tol) for k in range(len(traj.times))]
    scale = tol * max(1.0, fleet.total_power)
    bad = 0
    for k in range(len(sets) - 1):
        later = sets[k + 1]
        earlier = sets[k]
        for p in later:
            if np.abs(earlier - p).min() > scale:
                bad += 1
    return bad


def prefix_violations(
    fleet: Fleet,
    initial: FleetState,
    signal: StepSignal,
    policy: Policy,
    split_times,
    tol: float = EPS,
) -> int:
    return sum(
        not simulate_prefix_equivalence(fleet, initial, signal, policy, float(t), tol) for t in split_times
    )


def structure_report(fleet: Fleet, traj: DispatchTrajectory, tol: float = EPS) -> dict:
    """All trajectory-level GGDDF structure counts in one dict."""
    return {
        "greedy": greedy_violations(fleet, traj, tol),
        "order": order_violations(fleet, traj, tol),
        "coalescence": coalescence_violations(fleet, traj, tol),
        "pi_nesting": pi_nesting_violations(fleet, traj, tol),
        "conservation": int(conservation_error(fleet, traj) > tol),
        "bounds": int(bound_violation(fleet, traj) > tol),
    }
