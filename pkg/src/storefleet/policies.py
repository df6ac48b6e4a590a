"""Rate-allocation rules for a fleet at one instant.

Every allocator looks only at the current state and the current demand,
which is what makes the online policies non-anticipatory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import EPS, Fleet, FleetState, external_power_total

ONLINE_KINDS = ("ggddf", "ggcdf", "combined", "priority")
KINDS = ONLINE_KINDS + ("reverse-ggddf",)


@dataclass(frozen=True)
class Policy:
    kind: str
    order: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown policy {self.kind!r}; expected one of {KINDS}")
        if self.kind == "priority":
            if self.order is None:
                raise ValueError("priority policy needs a store order")
            object.__setattr__(self, "order", tuple(int(i) for i in self.order))
        elif self.order is not None:
            raise ValueError(f"policy {self.kind!r} takes no store order")

    @property
    def online(self) -> bool:
        return self.kind != "reverse-ggddf"

    def label(self, fleet: Fleet | None = None) -> str:
        if self.kind != "priority":
            return self.kind
        if fleet is not None:
            if self.order == capacity_order(fleet, descending=False):
                return "priority:asc"
            if self.order == capacity_order(fleet, descending=True):
                return "priority:desc"
        return "priority:" + ",".join(map(str, self.order))

    def check(self, fleet: Fleet) -> None:
        if self.kind == "priority" and sorted(self.order) != list(range(len(fleet))):
            raise ValueError(f"priority order {self.order} is not a permutation of the fleet")
        if self.kind in ("ggcdf", "combined"):
            fleet.common_efficiency()


GGDDF = Policy("ggddf")
GGCDF = Policy("ggcdf")
COMBINED = Policy("combined")
REVERSE_GGDDF = Policy("reverse-ggddf")


def capacity_order(fleet: Fleet, descending: bool = False) -> tuple[int, ...]:
    cap = fleet.capacity
    key = -cap if descending else cap
    return tuple(int(i) for i in np.argsort(key, kind="stable"))


def priority(fleet: Fleet, order: str | tuple[int, ...]) -> Policy:
    """Priority-greedy policy from a preset name (``asc``/``desc``) or explicit order."""
    if order == "asc":
        return Policy("priority", capacity_order(fleet, descending=False))
    if order == "desc":
        return Policy("priority", capacity_order(fleet, descending=True))
    return Policy("priority", tuple(order))


def parse_policy(text: str, fleet: Fleet) -> Policy:
    """Parse ``ggddf|ggcdf|combined|reverse-ggddf|priority:<order>``.

    ``<order>`` is ``asc``, ``desc`` or a comma-separated list of store ids
    (or zero-based indices).
    """
    text = text.strip().lower()
    if not text.startswith("priority"):
        return Policy(text)
    _, _, spec = text.partition(":")
    if spec in ("asc", "desc"):
        return priority(fleet, spec)
    if not spec:
        raise ValueError("priority policy needs an order, e.g. priority:asc")
    order = []
    for tok in spec.split(","):
        tok = tok.strip()
        try:
            order.append(fleet.index_of(tok))
        except KeyError:
            order.append(int(tok))
    pol = Policy("priority", tuple(order))
    pol.check(fleet)
    return pol


@dataclass(frozen=True)
class Allocation:
    """Rates chosen at one instant plus the external power accounting.

    ``served`` is net power delivered to the external system (negative while
    the fleet absorbs surplus).
    """

    rates: np.ndarray
    served: float
    unserved: float
    spilled: float


def _empty_tol(fleet: Fleet, tol: float) -> np.ndarray:
    return tol * np.maximum(1.0, fleet.capacity)


def duration_groups(durations: np.ndarray, active: np.ndarray, tol: float = EPS) -> list[np.ndarray]:
    """Active store indices grouped by equal duration, longest first.

    Consecutive durations (in sorted order) within ``tol`` share a group.
    """
    idx = np.nonzero(active)[0]
    if len(idx) == 0:
        return []
    idx = idx[np.argsort(-durations[idx], kind="stable")]
    groups, start = [], 0
    for k in range(1, len(idx)):
        if durations[idx[k - 1]] - durations[idx[k]] > tol:
            groups.append(idx[start:k])
            start = k
    groups.append(idx[start:])
    return groups


def _fill_groups(groups: list[np.ndarray], limits: np.ndarray, target: float, n: int) -> np.ndarray:
    """Run groups in turn at their limits until ``target`` is met; scale the last."""
    out = np.zeros(n)
    remaining = target
    for g in groups:
        if remaining <= 0:
            break
        cap = limits[g].sum()
        if cap <= remaining:
            out[g] = limits[g]
            remaining -= cap
        else:
            out[g] = limits[g] * (remaining / cap)
            remaining = 0.0
    return out


def discharge_durations(fleet: Fleet, state: FleetState) -> np.ndarray:
    return state.energies / fleet.max_discharge


def charge_durations(fleet: Fleet, state: FleetState) -> np.ndarray:
    room = fleet.capacity - state.energies
    pc = fleet.max_charge
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(pc > 0, room / np.where(pc > 0, pc, 1.0), 0.0)


def live_mask(fleet: Fleet, state: FleetState, tol: float = EPS) -> np.ndarray:
    """Stores with usable energy above the emptiness tolerance."""
    return state.energies > _empty_tol(fleet, tol)


def chargeable_mask(fleet: Fleet, state: FleetState, tol: float = EPS) -> np.ndarray:
    room = fleet.capacity - state.energies
    return (room > _empty_tol(fleet, tol)) & (fleet.max_charge > 0)


def _discharge_allocation(fleet: Fleet, rates: np.ndarray, demand: float) -> Allocation:
    served = float(rates.sum())
    return Allocation(rates, served, max(demand - served, 0.0), 0.0)


def ggddf_allocate(fleet: Fleet, state: FleetState, demand: float, tol: float = EPS) -> Allocation:
    """Greedy greatest-discharge-duration-first allocation for ``demand >= 0``."""
    if demand < 0:
        raise ValueError("ggddf_allocate needs demand >= 0")
    live = live_mask(fleet, state, tol)
    groups = duration_groups(discharge_durations(fleet, state), live, tol)
    rates = _fill_groups(groups, fleet.max_discharge, demand, len(fleet))
    return _discharge_allocation(fleet, rates, demand)


def ggcdf_allocate(fleet: Fleet, state: FleetState, surplus: float, tol: float = EPS) -> Allocation:
    """Greedy greatest-charge-duration-first absorption of ``surplus >= 0``.

    Internal charge is capped at ``efficiency * surplus`` so the external draw
    never exceeds the surplus.
    """
    if surplus < 0:
        raise ValueError("ggcdf_allocate needs surplus >= 0")
    eta = fleet.common_efficiency()
    ok = chargeable_mask(fleet, state, tol)
    groups = duration_groups(charge_durations(fleet, state), ok, tol)
    internal = _fill_groups(groups, fleet.max_charge, eta * surplus, len(fleet))
    drawn = float(internal.sum()) / eta
    return Allocation(-internal, -drawn, 0.0, max(surplus - drawn, 0.0))


def combined_allocate(fleet: Fleet, state: FleetState, d: float, tol: float = EPS) -> Allocation:
    fleet.common_efficiency()
    if d >= 0:
        return ggddf_allocate(fleet, state, d, tol)
    return ggcdf_allocate(fleet, state, -d, tol)


def priority_greedy_allocate(
    fleet: Fleet, state: FleetState, demand: float, order, tol: float = EPS
) -> Allocation:
    """Serve ``demand`` from stores in a fixed order, each at full rate."""
    if demand < 0:
        raise ValueError("priority_greedy_allocate needs demand >= 0")
    live = live_mask(fleet, state, tol)
    groups = [np.array([i]) for i in order if live[i]]
    rates = _fill_groups(groups, fleet.max_discharge, demand, len(fleet))
    return _discharge_allocation(fleet, rates, demand)


def allocate(policy: Policy, fleet: Fleet, state: FleetState, d: float, tol: float = EPS) -> Allocation:
    """Dispatch one instant under an online policy for demand ``d`` of either sign.

    Discharge-only policies treat surplus as spilled; GGCDF alone serves no
    positive demand.
    """
    kind = policy.kind
    if kind == "combined":
        return combined_allocate(fleet, state, d, tol)
    if kind == "ggcdf":
        if d >= 0:
            return Allocation(np.zeros(len(fleet)), 0.0, float(d), 0.0)
        return ggcdf_allocate(fleet, state, -d, tol)
    if d < 0:
        return Allocation(np.zeros(len(fleet)), 0.0, 0.0, float(-d))
    if kind == "ggddf":
        return ggddf_allocate(fleet, state, d, tol)
    if kind == "priority":
        return priority_greedy_allocate(fleet, state, d, policy.order, tol)
    raise ValueError(f"policy {kind!r} is offline and has no instantaneous allocation")


def tracked_durations(policy: Policy, fleet: Fleet, state: FleetState, d: float, tol: float = EPS):
    """Durations whose coalescence changes the allocation, with their power limits.

    Returns ``(durations, limits, active)`` or ``None`` when group structure
    plays no role (priority order, idle).
    """
    if policy.kind == "priority":
        return None
    if d >= 0 and policy.kind in ("ggddf", "combined"):
        return discharge_durations(fleet, state), fleet.max_discharge, live_mask(fleet, state, tol)
    if d < 0 and policy.kind in ("ggcdf", "combined"):
        return charge_durations(fleet, state), fleet.max_charge, chargeable_mask(fleet, state, tol)
    return None


def check_accounting(fleet: Fleet, alloc: Allocation, d: float, tol: float = EPS) -> float:
    """Largest violation of the external-power bookkeeping identities."""
    net = external_power_total(fleet, alloc.rates)
    errs = [abs(net - alloc.served)]
    if d >= 0:
        errs.append(abs(alloc.served + alloc.unserved - d))
        errs.append(max(0.0, -alloc.served - tol))
    else:
        errs.append(abs(-alloc.served + alloc.spilled + d))
    errs += [max(0.0, min(d, 0.0) - net), max(0.0, net - max(d, 0.0))]
    errs += [max(0.0, -alloc.unserved), max(0.0, -alloc.spilled)]
    return float(max(errs))
