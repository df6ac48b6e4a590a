"""Optimal scheduling of heterogeneous energy-store fleets."""

from .engine import DispatchTrajectory, SimReport, SimulationError, simulate
from .model import (
    EPS,
    CapacityViolation,
    Fleet,
    FleetState,
    MixedEfficiencyError,
    RateViolation,
    StepSignal,
    Store,
    validate_fleet,
)
from .policies import COMBINED, GGCDF, GGDDF, REVERSE_GGDDF, Policy, allocate, parse_policy, priority
from .transforms import (
    PwlConvex,
    burst_power_profile,
    can_fully_serve,
    demand_transform,
    min_unserved_energy,
    store_transform,
)

__version__ = "0.1.0"

__all__ = [
    "EPS",
    "COMBINED",
    "GGCDF",
    "GGDDF",
    "REVERSE_GGDDF",
    "CapacityViolation",
    "DispatchTrajectory",
    "Fleet",
    "FleetState",
    "MixedEfficiencyError",
    "Policy",
    "PwlConvex",
    "RateViolation",
    "SimReport",
    "SimulationError",
    "StepSignal",
    "Store",
    "allocate",
    "burst_power_profile",
    "can_fully_serve",
    "demand_transform",
    "min_unserved_energy",
    "parse_policy",
    "priority",
    "simulate",
    "store_transform",
    "validate_fleet",
]
