from dataclasses import replace

import numpy as np
import pytest

from storefleet import invariants as inv
from storefleet.engine import simulate
from storefleet.oracle.instances import random_instance, trial_rng
from storefleet.policies import COMBINED, GGDDF, priority

from conftest import example1_fleet, example1_signal


def ex1(policy):
    fl = example1_fleet()
    traj, _ = simulate(fl, fl.full_state(), example1_signal(), policy)
    return fl, traj


def test_example1_ggddf_is_clean():
    fl, traj = ex1(GGDDF)
    assert not any(inv.structure_report(fl, traj).values())


def test_rival_policy_breaks_structure():
    fl = example1_fleet()
    _, traj = ex1(priority(fl, "desc"))
    assert inv.order_violations(fl, traj) > 0
    assert inv.coalescence_violations(fl, traj) > 0
    assert inv.pi_nesting_violations(fl, traj) > 0
    # greedy identity holds for any greedy order
    assert inv.greedy_violations(fl, traj) == 0


def test_tampered_trajectory_detected():
    fl, traj = ex1(GGDDF)
    served = traj.served.copy()
    served[0] -= 1.0
    assert inv.greedy_violations(fl, replace(traj, served=served)) == 1
    E = traj.energies.copy()
    E[1, 0] += 1.0
    assert inv.conservation_error(fl, replace(traj, energies=E)) > 1e-3
    E[1, 0] = fl.capacity[0] + 5
    assert inv.bound_violation(fl, replace(traj, energies=E)) > 0


def test_prefix_violations_zero_on_example1():
    fl = example1_fleet()
    assert inv.prefix_violations(fl, fl.full_state(), example1_signal(), GGDDF, [0.5, 2.0, 3.7]) == 0


@pytest.mark.parametrize("trial", range(50))
def test_online_policies_are_non_anticipatory(trial):
    rng = trial_rng(41, trial)
    inst = random_instance(rng, "mixed")
    pols = [GGDDF, priority(inst.fleet, "asc")]
    if np.ptp(inst.fleet.efficiency) == 0:
        pols.append(COMBINED)
    splits = rng.uniform(0, inst.horizon, 3)
    for pol in pols:
        assert inv.prefix_violations(inst.fleet, inst.initial, inst.signal, pol, splits) == 0
