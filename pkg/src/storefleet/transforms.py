"""Energy-power transforms of stored energy and of demand.

Both transforms are convex, decreasing, piecewise-linear functions of a
reference power ``p`` and are held as knot lists, so that dominance and
maximum-gap questions reduce to finite scans over the merged knot set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import EPS, Fleet, FleetState, StepSignal


@dataclass(frozen=True)
class StepFunction:
    """Weakly decreasing step function of duration ``u``.

    ``levels[k]`` holds on ``(breakpoints[k-1], breakpoints[k]]`` (with
    ``breakpoints[-1]`` read as 0) and the function is 0 past the last
    breakpoint.
    """

    breakpoints: np.ndarray
    levels: np.ndarray

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        k = np.searchsorted(self.breakpoints, u, side="left")
        lv = np.append(self.levels, 0.0)
        return lv[k]

    def integral(self, upto: float = np.inf) -> float:
        """Integral of the profile over ``[0, upto]``."""
        left = np.concatenate([[0.0], self.breakpoints[:-1]])
        widths = np.clip(np.minimum(self.breakpoints, upto) - left, 0.0, None)
        return float(np.dot(widths, self.levels))


@dataclass(frozen=True)
class PwlConvex:
    """Piecewise-linear interpolation of ``knots``, zero beyond the last one."""

    p: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        e = np.asarray(self.e, dtype=float)
        if p.shape != e.shape or p.ndim != 1 or len(p) == 0:
            raise ValueError("knots must be two equal-length non-empty vectors")
        if np.any(np.diff(p) <= 0):
            raise ValueError("knot powers must be strictly increasing")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "e", e)

    @property
    def knots(self) -> list[tuple[float, float]]:
        return list(zip(self.p.tolist(), self.e.tolist()))

    def __call__(self, p):
        return np.interp(p, self.p, self.e, right=0.0)

    def slopes(self) -> np.ndarray:
        return np.diff(self.e) / np.diff(self.p)

    def is_convex_decreasing(self, tol: float = EPS) -> bool:
        s = self.slopes()
        scale = tol * max(1.0, float(np.abs(self.e).max()))
        return bool(
            np.all(np.diff(self.e) <= scale)
            and np.all(np.diff(s) >= -scale)
            and abs(self.e[-1]) <= scale
        )

    def dominates(self, other: "PwlConvex", tol: float = EPS) -> bool:
        ps = merged_knots(self, other)
        return bool(np.all(self(ps) >= other(ps) - tol))


def merged_knots(*fs: PwlConvex) -> np.ndarray:
    return np.unique(np.concatenate([f.p for f in fs]))


def _durations(fleet: Fleet, state: FleetState) -> np.ndarray:
    return state.energies / fleet.max_discharge


def burst_power_profile(fleet: Fleet, state: FleetState, tol: float = EPS) -> StepFunction:
    """Total power sustainable for at least ``u`` further hours."""
    dur = _durations(fleet, state)
    P = fleet.max_discharge
    live = dur > 0
    if not live.any():
        return StepFunction(np.zeros(0), np.zeros(0))
    order = np.argsort(-dur[live], kind="stable")
    d_sorted = dur[live][order]
    cumP = np.cumsum(P[live][order])
    bps, levels = [], []
    for j in range(len(d_sorted)):
        if j == len(d_sorted) - 1 or d_sorted[j] - d_sorted[j + 1] > tol:
            bps.append(float(d_sorted[j]))
            levels.append(float(cumP[j]))
    return StepFunction(np.array(bps[::-1]), np.array(levels[::-1]))


def group_boundaries(fleet: Fleet, state: FleetState, tol: float = EPS) -> np.ndarray:
    """Cumulative-power points separating discharge-duration groups.

    Includes 0, every boundary between groups of distinct duration in
    descending order, and the total power of non-empty stores.
    """
    dur = _durations(fleet, state)
    live = state.energies > 0
    P = fleet.max_discharge
    order = np.argsort(-dur[live], kind="stable")
    d_sorted = dur[live][order]
    cumP = np.cumsum(P[live][order])
    pts = [0.0]
    for j in range(len(d_sorted)):
        last = j == len(d_sorted) - 1
        if last or d_sorted[j] - d_sorted[j + 1] > tol:
            pts.append(float(cumP[j]))
    return np.array(pts)


def store_transform(fleet: Fleet, state: FleetState, tol: float = EPS) -> PwlConvex:
    """Energy above reference power ``p`` if every store ran flat out until empty."""
    E = state.energies
    dur = _durations(fleet, state)
    live = E > 0
    if not live.any():
        return PwlConvex([0.0], [0.0])
    order = np.argsort(-dur[live], kind="stable")
    d_sorted = dur[live][order]
    e_sorted = E[live][order]
    cumP = np.cumsum(fleet.max_discharge[live][order])
    # energy above the cumulative power of the top j stores is what the rest hold
    tail = np.concatenate([np.cumsum(e_sorted[::-1])[::-1], [0.0]])
    ps, es = [0.0], [float(tail[0])]
    for j in range(len(d_sorted)):
        last = j == len(d_sorted) - 1
        if last or d_sorted[j] - d_sorted[j + 1] > tol:
            ps.append(float(cumP[j]))
            es.append(float(tail[j + 1]))
    return PwlConvex(ps, es)


def demand_transform(signal: StepSignal, t: float, T: float, tol: float = EPS) -> PwlConvex:
    """Unserved energy on ``[t, T]`` if power ``p`` were supplied throughout."""
    if not 0 <= t <= T <= signal.horizon + tol:
        raise ValueError(f"need 0 <= t <= T <= horizon, got t={t}, T={T}")
    lengths, values = signal.restrict(t, T)
    pos = values > 0
    lengths, values = lengths[pos], values[pos]
    if len(values) == 0:
        return PwlConvex([0.0], [0.0])
    levels = np.unique(values)
    keep = np.concatenate([[True], np.diff(levels) > tol])
    levels = levels[keep]
    ps = np.concatenate([[0.0], levels])
    es = np.array([np.dot(lengths, np.maximum(values - p, 0.0)) for p in ps])
    es[-1] = 0.0
    return PwlConvex(ps, es)


def transform_gap(demand_tf: PwlConvex, store_tf: PwlConvex) -> tuple[float, float]:
    """Maximum of ``demand_tf - store_tf`` over ``p >= 0``, clamped at 0, and its argmax."""
    ps = merged_knots(demand_tf, store_tf)
    gaps = demand_tf(ps) - store_tf(ps)
    k = int(np.argmax(gaps))
    if gaps[k] <= 0:
        # both vanish beyond their last knots, so the supremum is 0 there
        return 0.0, float(ps[-1])
    return float(gaps[k]), float(ps[k])


def _require_nonnegative(signal: StepSignal, t: float, T: float) -> None:
    _, values = signal.restrict(t, T)
    if np.any(values < 0):
        raise ValueError(
            "pure-discharge transforms need a nonnegative signal on the interval; "
            f"found demand {values.min():g}"
        )


def min_unserved_energy(
    fleet: Fleet, state: FleetState, signal: StepSignal, T: float | None = None, tol: float = EPS
) -> tuple[float, float]:
    """Minimum unserved energy over ``[state.time, T]`` and the power attaining it."""
    T = signal.horizon if T is None else T
    _require_nonnegative(signal, state.time, T)
    return transform_gap(demand_transform(signal, state.time, T, tol), store_transform(fleet, state, tol))


@dataclass(frozen=True)
class ServiceCheck:
    feasible: bool
    gap: float
    witness: float | None

    def __bool__(self) -> bool:
        return self.feasible


def can_fully_serve(
    fleet: Fleet, state: FleetState, signal: StepSignal, T: float | None = None, tol: float = EPS
) -> ServiceCheck:
    gap, p_star = min_unserved_energy(fleet, state, signal, T, tol)
    scale = tol * max(1.0, state.total_energy)
    if gap <= scale:
        return ServiceCheck(True, gap, None)
    return ServiceCheck(False, gap, p_star)


def critical_power(fleet: Fleet, final_state: FleetState, tol: float = EPS) -> float:
    """Smallest reference power at which the final store transform vanishes."""
    f = store_transform(fleet, final_state, tol)
    idx = np.nonzero(f.e <= tol * max(1.0, float(f.e[0])))[0]
    return float(f.p[idx[0]])
