"""Random small dispatch instances for the verification suites.

Bounds: at most 5 stores, at most 8 segments, magnitudes within [0, 10].
Segment lengths are multiples of 0.5 h so every instance sits on an
aligned grid. Values are drawn on coarse lattices on purpose: ties between
durations and demand levels are where grouping logic tends to break.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import Fleet, FleetState, StepSignal, Store

SHAPES = ("any", "decreasing", "increasing", "unimodal", "mixed")


@dataclass(frozen=True)
class Instance:
    fleet: Fleet
    initial: FleetState
    signal: StepSignal
    subset: tuple[int, ...] | None = None

    @property
    def horizon(self) -> float:
        return self.signal.horizon


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(trial)])


def _lattice(rng, lo, hi, step, size=None):
    k = rng.integers(int(round(lo / step)), int(round(hi / step)) + 1, size=size)
    return k * step


def random_fleet(
    rng: np.random.Generator,
    max_stores: int = 5,
    common_efficiency: bool = False,
) -> Fleet:
    n = int(rng.integers(1, max_stores + 1))
    P = _lattice(rng, 0.5, 5.0, 0.5, n)
    cap = _lattice(rng, 0.5, 10.0, 0.5, n)
    Pc = np.where(rng.random(n) < 0.5, P, _lattice(rng, 0.0, 5.0, 0.5, n))
    if common_efficiency:
        eta = np.full(n, 1.0 if rng.random() < 0.3 else float(_lattice(rng, 0.5, 1.0, 0.05)))
    else:
        eta = np.where(rng.random(n) < 0.3, 1.0, _lattice(rng, 0.5, 1.0, 0.05, n))
    return Fleet([Store(f"s{i}", float(cap[i]), float(P[i]), float(Pc[i]), float(eta[i])) for i in range(n)])


def random_state(rng: np.random.Generator, fleet: Fleet, full: bool | None = None) -> FleetState:
    cap = fleet.capacity
    if full is None:
        full = rng.random() < 0.3
    if full:
        return FleetState(0.0, cap)
    frac = _lattice(rng, 0.0, 1.0, 0.125, len(fleet))
    return FleetState(0.0, cap * frac)


def random_shape(rng: np.random.Generator, n: int, shape: str) -> np.ndarray:
    """Unit-scale demand pattern of ``n`` segments with the requested monotonicity."""
    v = rng.random(n)
    if shape == "decreasing":
        v = np.sort(v)[::-1]
    elif shape == "increasing":
        v = np.sort(v)
    elif shape == "unimodal":
        top = int(np.argmax(v))
        rest = np.delete(v, top)
        left = rng.random(n - 1) < 0.5
        v = np.concatenate([np.sort(rest[left]), [v[top]], np.sort(rest[~left])[::-1]])
    elif shape == "mixed":
        v = 2 * v - 1
    elif shape != "any":
        raise ValueError(f"unknown shape {shape!r}")
    return v


def random_signal(
    rng: np.random.Generator,
    fleet: Fleet,
    state: FleetState,
    shape: str = "any",
    max_segments: int = 8,
) -> StepSignal:
    """Step signal scaled to stress the fleet: peaks near its power, total near its energy."""
    n = int(rng.integers(1, max_segments + 1))
    lengths = _lattice(rng, 0.5, 2.0, 0.5, n)
    v = random_shape(rng, n, shape)
    live_power = float(fleet.max_discharge[state.energies > 0].sum()) or fleet.total_power
    peak = min(10.0, live_power * rng.uniform(0.4, 1.15))
    energy = state.total_energy * rng.uniform(0.5, 1.4)
    raw_energy = float(np.dot(np.maximum(v, 0), lengths)) or 1.0
    scale = min(peak / max(np.abs(v).max(), 1e-12), energy / raw_energy)
    vals = np.clip(np.round(v * scale * 4) / 4, -10.0, 10.0)
    return StepSignal.from_durations(lengths, vals)


def random_instance(rng: np.random.Generator, shape: str = "any", full: bool | None = None) -> Instance:
    fleet = random_fleet(rng)
    state = random_state(rng, fleet, full)
    return Instance(fleet, state, random_signal(rng, fleet, state, shape))


def random_proportional_instance(rng: np.random.Generator) -> Instance:
    """Fleet with equal capacity/power ratios, charge limits proportional to
    discharge limits, one efficiency, and a balanced start; mixed-sign demand."""
    n = int(rng.integers(1, 6))
    P = _lattice(rng, 0.5, 5.0, 0.5, n)
    c = float(_lattice(rng, 0.5, 2.0, 0.25))
    alpha = float(_lattice(rng, 0.25, 1.5, 0.25))
    eta = 1.0 if rng.random() < 0.3 else float(_lattice(rng, 0.5, 1.0, 0.05))
    cap = np.minimum(c * P, 10.0)
    P = cap / c
    fleet = Fleet([Store(f"s{i}", float(cap[i]), float(P[i]), float(alpha * P[i]), eta) for i in range(n)])
    b = float(rng.uniform(0.0, 1.0)) * c
    state = FleetState(0.0, b * P)
    ns = int(rng.integers(1, 9))
    lengths = _lattice(rng, 0.5, 2.0, 0.5, ns)
    v = random_shape(rng, ns, "mixed")
    vals = np.round(v * min(10.0, fleet.total_power * rng.uniform(0.5, 1.3)) * 4) / 4
    return Instance(fleet, state, StepSignal.from_durations(lengths, vals))


def random_theorem4_instance(rng: np.random.Generator) -> Instance:
    """Increasing demand starting at or above the partition threshold ``k``."""
    from .theorems import theorem4_threshold

    fleet = random_fleet(rng)
    state = random_state(rng, fleet, full=False)
    k = theorem4_threshold(fleet, state).k
    n = int(rng.integers(1, 9))
    lengths = _lattice(rng, 0.5, 2.0, 0.5, n)
    live = float(fleet.max_discharge[state.energies > 0].sum())
    top = max(k, min(10.0, live * rng.uniform(0.6, 1.1)))
    v = np.sort(rng.random(n))
    vals = np.ceil((k + v * (top - k)) * 4) / 4
    vals = np.maximum.accumulate(np.maximum(vals, k))
    # shrink segments until the demanded energy is within reach of the stores
    target = state.total_energy * rng.uniform(0.4, 1.1)
    while len(vals) > 1 and float(np.dot(vals, lengths)) > target:
        vals, lengths = vals[:-1], lengths[:-1]
    while lengths.max() > 0.5 and float(np.dot(vals, lengths)) > target:
        lengths = np.maximum(lengths - 0.5, 0.5)
    return Instance(fleet, state, StepSignal.from_durations(lengths, vals))


def random_subset(rng: np.random.Generator, n: int) -> tuple[int, ...]:
    size = int(rng.integers(1, n + 1))
    return tuple(sorted(int(i) for i in rng.choice(n, size=size, replace=False)))
