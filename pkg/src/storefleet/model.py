"""Fleet domain types and store-level energy accounting.

Units are MW for power, MWh for energy and hours for time. Store energy is
always measured as usable output energy, so a store charging at internal
rate ``-r`` draws ``-r / efficiency`` from the external system.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

EPS = 1e-9
"""Global absolute tolerance for emptiness, fullness and time comparisons."""


class CapacityViolation(ValueError):
    pass


class RateViolation(ValueError):
    pass


class MixedEfficiencyError(ValueError):
    pass


@dataclass(frozen=True)
class Store:
    id: Hashable
    capacity: float
    max_discharge: float
    max_charge: float = 0.0
    efficiency: float = 1.0

    @property
    def name(self) -> str:
        return str(self.id)


@dataclass(frozen=True)
class Violation:
    store_id: Hashable | None
    field: str
    message: str

    def __str__(self) -> str:
        where = "fleet" if self.store_id is None else f"store {self.store_id!r}"
        return f"{where}: {self.message}"


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Fleet:
    """Ordered collection of stores with vectorised parameter accessors."""

    stores: tuple[Store, ...]

    def __post_init__(self):
        object.__setattr__(self, "stores", tuple(self.stores))

    def __len__(self) -> int:
        return len(self.stores)

    def __iter__(self):
        return iter(self.stores)

    @property
    def ids(self) -> list:
        return [s.id for s in self.stores]

    @property
    def capacity(self) -> np.ndarray:
        return _frozen([s.capacity for s in self.stores])

    @property
    def max_discharge(self) -> np.ndarray:
        return _frozen([s.max_discharge for s in self.stores])

    @property
    def max_charge(self) -> np.ndarray:
        return _frozen([s.max_charge for s in self.stores])

    @property
    def efficiency(self) -> np.ndarray:
        return _frozen([s.efficiency for s in self.stores])

    @property
    def total_power(self) -> float:
        return float(sum(s.max_discharge for s in self.stores))

    def common_efficiency(self, tol: float = EPS) -> float:
        """Return the shared round-trip efficiency, or raise if stores differ."""
        eta = self.efficiency
        if len(eta) == 0:
            return 1.0
        if np.ptp(eta) > tol:
            raise MixedEfficiencyError(
                f"stores must share one round-trip efficiency, got {sorted(set(eta.tolist()))}"
            )
        return float(eta[0])

    def full_state(self, time: float = 0.0) -> "FleetState":
        return FleetState(time, self.capacity)

    def index_of(self, store_id) -> int:
        for k, s in enumerate(self.stores):
            if s.id == store_id or str(s.id) == str(store_id):
                return k
        raise KeyError(store_id)


@dataclass(frozen=True)
class FleetState:
    time: float
    energies: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "time", float(self.time))
        object.__setattr__(self, "energies", _frozen(self.energies))

    @property
    def total_energy(self) -> float:
        return float(self.energies.sum())

    def check(self, fleet: Fleet, tol: float = EPS) -> None:
        if len(self.energies) != len(fleet):
            raise ValueError(
                f"state has {len(self.energies)} energies for a fleet of {len(fleet)} stores"
            )
        cap = fleet.capacity
        bad = (self.energies < -tol) | (self.energies > cap + tol)
        if bad.any():
            k = int(np.argmax(bad))
            raise CapacityViolation(
                f"store {fleet.stores[k].id!r}: energy {self.energies[k]:g} outside [0, {cap[k]:g}]"
            )


@dataclass(frozen=True)
class RateVector:
    """Per-store internal rates; positive discharges, negative charges."""

    rates: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rates", _frozen(self.rates))

    def check(self, fleet: Fleet, tol: float = EPS) -> None:
        r = self.rates
        lo = -fleet.max_charge - tol
        hi = fleet.max_discharge + tol
        bad = (r < lo) | (r > hi)
        if bad.any():
            k = int(np.argmax(bad))
            s = fleet.stores[k]
            raise RateViolation(
                f"store {s.id!r}: rate {r[k]:g} outside [{-s.max_charge:g}, {s.max_discharge:g}]"
            )


@dataclass(frozen=True)
class StepSignal:
    """Piecewise-constant demand on right-open segments ``[t_k, t_{k+1})``.

    ``values[k]`` holds on segment ``k``; negative values are surplus
    available for charging. The last breakpoint is the horizon.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if bp.ndim != 1 or v.ndim != 1 or len(bp) != len(v) + 1:
            raise ValueError("need len(breakpoints) == len(values) + 1")
        if len(v) == 0:
            raise ValueError("signal needs at least one segment")
        if bp[0] != 0.0:
            raise ValueError("first breakpoint must be 0")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not (np.all(np.isfinite(bp)) and np.all(np.isfinite(v))):
            raise ValueError("signal must be finite")
        object.__setattr__(self, "breakpoints", _frozen(bp))
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def from_durations(cls, durations: Sequence[float], values: Sequence[float]) -> "StepSignal":
        return cls(np.concatenate([[0.0], np.cumsum(durations)]), values)

    @classmethod
    def constant(cls, value: float, horizon: float) -> "StepSignal":
        return cls([0.0, horizon], [value])

    @property
    def horizon(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def durations(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def __len__(self) -> int:
        return len(self.values)

    def segment_index(self, t: float) -> int:
        """Index of the segment containing ``t`` under the right-limit convention."""
        k = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return min(max(k, 0), len(self.values) - 1)

    def __call__(self, t: float) -> float:
        return float(self.values[self.segment_index(t)])

    def restrict(self, t0: float, t1: float) -> tuple[np.ndarray, np.ndarray]:
        """Segment lengths and values of the signal clipped to ``[t0, t1]``."""
        lo = np.clip(self.breakpoints[:-1], t0, t1)
        hi = np.clip(self.breakpoints[1:], t0, t1)
        lengths = hi - lo
        keep = lengths > 0
        return lengths[keep], self.values[keep]

    def truncate(self, t_end: float) -> "StepSignal":
        if not 0 < t_end <= self.horizon:
            raise ValueError(f"truncation time {t_end} outside (0, {self.horizon}]")
        inner = self.breakpoints[(self.breakpoints > 0) & (self.breakpoints < t_end)]
        bp = np.concatenate([[0.0], inner, [t_end]])
        return StepSignal(bp, [self(t) for t in bp[:-1]])

    def reversed(self) -> "StepSignal":
        T = self.horizon
        return StepSignal(T - self.breakpoints[::-1], self.values[::-1])

    def with_breakpoints(self, extra: Sequence[float]) -> "StepSignal":
        """Same signal with additional (redundant) breakpoints inserted."""
        pts = [t for t in extra if 0 < t < self.horizon]
        bp = np.unique(np.concatenate([self.breakpoints, pts]))
        return StepSignal(bp, [self(t) for t in bp[:-1]])

    def shifted(self, offset: float) -> "StepSignal":
        return StepSignal(self.breakpoints, self.values + offset)

    def clipped(self, lo: float = 0.0) -> "StepSignal":
        return StepSignal(self.breakpoints, np.maximum(self.values, lo))


def validate_fleet(fleet: Fleet) -> list[Violation]:
    """Return one violation per broken store or fleet invariant."""
    out: list[Violation] = []
    if len(fleet.stores) == 0:
        out.append(Violation(None, "stores", "fleet must contain at least one store"))
    seen = set()
    for s in fleet.stores:
        if s.id in seen:
            out.append(Violation(s.id, "id", f"duplicate store id {s.id!r}"))
        seen.add(s.id)
        vals = (s.capacity, s.max_discharge, s.max_charge, s.efficiency)
        if not all(np.isfinite(v) for v in vals):
            out.append(Violation(s.id, "value", "parameters must be finite"))
            continue
        if s.capacity < 0:
            out.append(Violation(s.id, "capacity", "capacity must be non-negative"))
        if s.max_discharge <= 0:
            out.append(Violation(s.id, "max_discharge", "max_discharge must be positive"))
        if s.max_charge < 0:
            out.append(Violation(s.id, "max_charge", "max_charge must be non-negative"))
        if not 0 < s.efficiency <= 1:
            out.append(Violation(s.id, "efficiency", "efficiency out of (0,1]"))
    return out


def zero_capacity_warnings(fleet: Fleet) -> list[str]:
    return [
        f"store {s.id!r} has zero capacity and is permanently empty and full"
        for s in fleet.stores
        if s.capacity == 0
    ]


def external_power(store: Store, rate: float) -> float:
    """Net power delivered to the external system by one store at ``rate``."""
    if rate >= 0:
        return float(rate)
    return float(rate) / store.efficiency


def external_power_total(fleet: Fleet, rates: np.ndarray) -> float:
    r = np.asarray(rates, dtype=float)
    return float(np.where(r >= 0, r, r / fleet.efficiency).sum())


def apply_rates(
    fleet: Fleet, state: FleetState, rates: RateVector | np.ndarray, dt: float, tol: float = EPS
) -> FleetState:
    """Advance ``state`` by ``dt`` hours holding ``rates`` constant."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    rv = rates if isinstance(rates, RateVector) else RateVector(rates)
    rv.check(fleet, tol)
    new = state.energies - rv.rates * dt
    cap = fleet.capacity
    scale = tol * np.maximum(1.0, cap)
    bad = (new < -scale) | (new > cap + scale)
    if bad.any():
        k = int(np.argmax(bad))
        raise CapacityViolation(
            f"store {fleet.stores[k].id!r}: energy would reach {new[k]:g}, outside [0, {cap[k]:g}]"
        )
    return FleetState(state.time + dt, np.clip(new, 0.0, cap))
