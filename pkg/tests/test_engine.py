import time

import numpy as np
import pytest

from storefleet import invariants as inv
from storefleet.engine import (
    SimulationError,
    reverse_ggddf_plan,
    simulate,
    simulate_prefix_equivalence,
    trajectories_match,
)
from storefleet.model import Fleet, FleetState, StepSignal, Store
from storefleet.oracle.instances import random_instance, random_proportional_instance, trial_rng
from storefleet.oracle.theorems import balance_spread
from storefleet.policies import COMBINED, GGCDF, GGDDF, REVERSE_GGDDF, parse_policy, priority

from conftest import example1_fleet, example1_signal, golden, load_fixture


def run_ex1(policy):
    fl = example1_fleet()
    return simulate(fl, fl.full_state(), example1_signal(), policy)


class TestExample1:
    def test_ggddf(self):
        traj, rep = run_ex1(GGDDF)
        assert rep.total_unserved == pytest.approx(100, abs=1e-6)
        assert rep.first_failure_time == pytest.approx(3.0, abs=1e-9)
        np.testing.assert_allclose(traj.times, [0, 1, 2, 3, 4], atol=1e-12)
        assert np.all(np.abs(traj.state_at(3.0).energies) <= 1e-9)
        assert np.all(traj.state_at(2.999).energies > 0)

    def test_event_structure(self):
        traj, _ = run_ex1(GGDDF)
        # at t=1 store 5 meets stores 3 and 4 (duration 1.5), at t=2 all five meet
        np.testing.assert_allclose(traj.energies[1] / 100, [1, 1.5, 1.5, 1.5, 1.5])
        np.testing.assert_allclose(traj.energies[2] / 100, [1, 1, 1, 1, 1])
        np.testing.assert_allclose(traj.rates[2], [100] * 5)

    def test_runtime(self):
        run_ex1(GGDDF)
        t0 = time.perf_counter()
        run_ex1(GGDDF)
        assert time.perf_counter() - t0 < 0.01

    @pytest.mark.parametrize("order", ["asc", "desc"])
    def test_priority_fails_to_empty(self, order):
        fl = example1_fleet()
        traj, rep = simulate(fl, fl.full_state(), example1_signal(), priority(fl, order))
        assert rep.total_unserved > 100 + 1e-6
        assert rep.final_state.total_energy > 0

    def test_reverse_ggddf(self):
        traj, rep = run_ex1(REVERSE_GGDDF)
        assert rep.total_unserved == pytest.approx(100, abs=1e-6)
        assert np.all(np.abs(rep.final_state.energies) <= 1e-9)
        short = traj.unserved_rate > 1e-9
        assert np.all(traj.times[1:][short] <= 0.5 + 1e-9)
        assert rep.first_failure_time == 0.0

    def test_k_threshold_fixture(self):
        # serving only demand above k = 25 by discharge duration empties the stores exactly
        fl = example1_fleet()
        above = example1_signal().shifted(-25).clipped(0.0)
        _, rep = simulate(fl, fl.full_state(), above, GGDDF)
        assert rep.total_unserved == pytest.approx(0, abs=1e-9)
        assert np.all(np.abs(rep.final_state.energies) <= 1e-9)

    def test_prefix_equivalence(self):
        fl = example1_fleet()
        assert simulate_prefix_equivalence(fl, fl.full_state(), example1_signal(), GGDDF, 2.0)
        with pytest.raises(ValueError):
            simulate_prefix_equivalence(fl, fl.full_state(), example1_signal(), REVERSE_GGDDF, 2.0)


@pytest.mark.parametrize("name", ["example1", "example-cc", "example-cc2", "theorem5-fleet"])
def test_fixture_goldens(name):
    fl, s, sig = load_fixture(name)
    for label, exp in golden(name)["policies"].items():
        _, rep = simulate(fl, s, sig, parse_policy(label, fl))
        assert rep.total_unserved == pytest.approx(exp["total_unserved"], abs=1e-6)
        assert rep.total_spilled == pytest.approx(exp["total_spilled"], abs=1e-6)
        if exp["first_failure_time"] is None:
            assert rep.first_failure_time is None
        else:
            assert rep.first_failure_time == pytest.approx(exp["first_failure_time"], abs=1e-9)
        np.testing.assert_allclose(rep.final_state.energies, exp["final_energies"], atol=1e-9)


def test_theorem5_fixture_stays_balanced():
    fl, s, sig = load_fixture("theorem5-fleet")
    traj, rep = simulate(fl, s, sig, COMBINED)
    assert rep.total_unserved == pytest.approx(5.4, abs=1e-9)
    assert balance_spread(fl, traj.energies) <= 1e-9


def test_discharge_policy_spills_surplus():
    fl = Fleet([Store("a", 4, 2, 2, 1.0)])
    sig = StepSignal([0, 1, 2], [-1.5, 1.0])
    _, rep = simulate(fl, fl.full_state(), sig, GGDDF)
    assert rep.total_spilled == pytest.approx(1.5)
    _, rep2 = simulate(fl, FleetState(0, [1.0]), sig, GGCDF)
    assert rep2.total_spilled == pytest.approx(0.0)
    assert rep2.total_unserved == pytest.approx(1.0)
    assert rep2.final_state.energies[0] == pytest.approx(2.5)


def test_horizon_checks():
    fl = example1_fleet()
    with pytest.raises(ValueError):
        simulate(fl, fl.full_state(), example1_signal(), GGDDF, T=5)
    traj, rep = simulate(fl, fl.full_state(), example1_signal(), GGDDF, T=2.5)
    assert traj.times[-1] == 2.5 and rep.total_unserved == 0
    with pytest.raises(ValueError):
        reverse_ggddf_plan(fl, FleetState(1.0, fl.capacity), example1_signal())


def test_event_guard():
    fl = example1_fleet()
    with pytest.raises(SimulationError):
        simulate(fl, fl.full_state(), example1_signal(), GGDDF, max_events=2)


def test_deterministic():
    inst = random_instance(trial_rng(3, 3), "mixed")
    for pol in (GGDDF, priority(inst.fleet, "asc")):
        a, _ = simulate(inst.fleet, inst.initial, inst.signal, pol)
        b, _ = simulate(inst.fleet, inst.initial, inst.signal, pol)
        assert np.array_equal(a.energies, b.energies) and np.array_equal(a.times, b.times)
        assert trajectories_match(a, b, tol=0.0)


TRIALS = range(60)


def _instances(seed, shape="any"):
    return [random_instance(trial_rng(seed, j), shape) for j in TRIALS]


@pytest.mark.parametrize("inst", _instances(21, "mixed"), ids=[f"t{j}" for j in TRIALS])
def test_trajectory_physics(inst):
    fl = inst.fleet
    pols = [GGDDF, priority(fl, "asc"), priority(fl, "desc")]
    if np.ptp(fl.efficiency) == 0:
        pols += [GGCDF, COMBINED]
    for pol in pols:
        traj, rep = simulate(fl, inst.initial, inst.signal, pol)
        assert inv.conservation_error(fl, traj) <= 1e-9
        assert inv.bound_violation(fl, traj) <= 1e-9
        ext = np.where(traj.rates >= 0, traj.rates, traj.rates / fl.efficiency).sum(axis=1)
        np.testing.assert_allclose(ext, traj.served, atol=1e-9)
        np.testing.assert_allclose(traj.served + traj.unserved_rate - traj.spilled_rate, traj.demand, atol=1e-9)


@pytest.mark.parametrize("inst", _instances(22), ids=[f"t{j}" for j in TRIALS])
def test_event_exactness(inst):
    """Adding redundant breakpoints changes neither the outcome nor the states at events."""
    traj, rep = simulate(inst.fleet, inst.initial, inst.signal, GGDDF)
    rng = trial_rng(23, int(inst.signal.horizon * 8))
    extra = rng.uniform(0, inst.signal.horizon, 4)
    traj2, rep2 = simulate(inst.fleet, inst.initial, inst.signal.with_breakpoints(extra), GGDDF)
    assert rep2.total_unserved == pytest.approx(rep.total_unserved, abs=1e-9)
    for t, E in zip(traj.times, traj.energies):
        np.testing.assert_allclose(traj2.state_at(t).energies, E, atol=1e-9)


@pytest.mark.parametrize("inst", _instances(24), ids=[f"t{j}" for j in TRIALS])
def test_unserved_monotone_in_initial_energy(inst):
    _, rep = simulate(inst.fleet, inst.initial, inst.signal, GGDDF)
    more = FleetState(0.0, np.minimum(inst.fleet.capacity, inst.initial.energies + 0.5))
    _, rep2 = simulate(inst.fleet, more, inst.signal, GGDDF)
    assert rep2.total_unserved <= rep.total_unserved + 1e-9


@pytest.mark.parametrize("trial", range(40))
def test_combined_balance_on_proportional_fleets(trial):
    inst = random_proportional_instance(trial_rng(25, trial))
    traj, _ = simulate(inst.fleet, inst.initial, inst.signal, COMBINED)
    assert balance_spread(inst.fleet, traj.energies) <= 1e-9
