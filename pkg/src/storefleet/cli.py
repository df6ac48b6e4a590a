"""``storefleet`` command line.

Exit status: 0 success, 1 a verification found a counterexample,
2 bad input (parse, validation, theorem hypotheses), 3 runtime failure
(policy not applicable, solver trouble).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io
from .engine import SimulationError, simulate
from .fixtures import NAMES as FIXTURES
from .fixtures import fixture_dir
from .model import EPS, MixedEfficiencyError, validate_fleet, zero_capacity_warnings
from .oracle.grid import OracleSizeError, GridProblem, solve
from .oracle.instances import Instance
from .oracle.simplex import LPError
from .oracle.suite import load_counterexample, run_suite
from .oracle.theorems import THEOREMS, HypothesisError, verify_theorem
from .policies import GGDDF, parse_policy
from .transforms import demand_transform, min_unserved_energy, store_transform, transform_gap

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2, 3

COMPARE_DEFAULT = "ggddf,priority:asc,priority:desc,reverse-ggddf"


class PolicyError(RuntimeError):
    pass


def _load(args):
    """Fleet, initial state and signal from ``--fixture`` or ``--fleet``/``--signal``."""
    if args.fixture:
        d = fixture_dir(args.fixture)
        fleet, state, signal = io.read_instance(d)
    elif args.fleet and args.signal:
        fleet, state = io.read_fleet(args.fleet)
        signal = io.read_signal(args.signal)
    else:
        raise ValueError("give --fixture NAME or both --fleet and --signal")
    bad = validate_fleet(fleet)
    if bad:
        raise ValueError("invalid fleet: " + "; ".join(map(str, bad)))
    for w in zero_capacity_warnings(fleet):
        print(f"warning: {w}", file=sys.stderr)
    state.check(fleet, args.tolerance)
    if args.horizon is not None:
        if args.horizon > signal.horizon + args.tolerance:
            raise ValueError(f"--horizon {args.horizon} exceeds the signal horizon {signal.horizon}")
        if args.horizon <= 0:
            raise ValueError("--horizon must be positive")
        signal = signal.truncate(args.horizon)
    return fleet, state, signal


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _policy(text, fleet):
    pol = parse_policy(text, fleet)
    try:
        pol.check(fleet)
    except MixedEfficiencyError as exc:
        raise PolicyError(f"policy {text!r} not applicable: {exc}") from None
    return pol


def _fmt_time(t):
    return "none" if t is None else f"{t:g}"


def cmd_simulate(args) -> int:
    fleet, state, signal = _load(args)
    pol = _policy(args.policy, fleet)
    traj, rep = simulate(fleet, state, signal, pol, tol=args.tolerance)
    out = _out_dir(args)
    io.write_trajectory(out / "trajectory.csv", traj)
    io.write_report(out / "report.json", rep, fleet.ids)
    print(f"policy {pol.label(fleet)}")
    print(f"total_unserved {rep.total_unserved:.9g}")
    print(f"total_spilled {rep.total_spilled:.9g}")
    print(f"first_failure_time {_fmt_time(rep.first_failure_time)}")
    print("final_state " + " ".join(f"{s}={e:.9g}" for s, e in zip(fleet.ids, rep.final_state.energies)))
    return EXIT_OK


def _state_at(fleet, state, signal, t, tol):
    if t <= 0:
        return state
    if t > signal.horizon:
        raise ValueError(f"--at {t} is beyond the horizon {signal.horizon}")
    traj, _ = simulate(fleet, state, signal, GGDDF, T=t, tol=tol)
    return traj.state(len(traj.times) - 1)


def cmd_transform(args) -> int:
    fleet, state, signal = _load(args)
    t = float(args.at)
    st = _state_at(fleet, state, signal, t, args.tolerance)
    es = store_transform(fleet, st, args.tolerance)
    ed = demand_transform(signal, t, signal.horizon, args.tolerance)
    out = _out_dir(args)
    (out / "store_transform.csv").write_text(io.transform_to_csv(es))
    (out / "demand_transform.csv").write_text(io.transform_to_csv(ed))
    gap, p = transform_gap(ed, es)
    print(f"max_gap {gap:.9g}")
    print(f"argmax_p {p:.9g}")
    return EXIT_OK


def cmd_minunserved(args) -> int:
    fleet, state, signal = _load(args)
    value, p = min_unserved_energy(fleet, state, signal)
    print(f"min_unserved {value:.9g}")
    print(f"argmax_p {p:.9g}")
    if args.oracle:
        sol = solve(GridProblem.from_signal(fleet, state, signal, cross_charging=args.cross_charging))
        print(f"oracle_min_unserved {sol.objective_value:.9g}")
    return EXIT_OK


def cmd_compare(args) -> int:
    fleet, state, signal = _load(args)
    rows = []
    for text in args.policies.split(","):
        pol = _policy(text.strip(), fleet)
        _, rep = simulate(fleet, state, signal, pol, tol=args.tolerance)
        rows.append((pol.label(fleet), rep.total_unserved, rep.first_failure_time, rep.total_spilled))
    w = max(len(r[0]) for r in rows + [("policy",)])
    print(f"{'policy':<{w}}  {'unserved_mwh':>14}  {'first_failure_h':>15}  {'spilled_mwh':>12}")
    for name, u, t, s in rows:
        print(f"{name:<{w}}  {u:>14.9g}  {_fmt_time(t):>15}  {s:>12.9g}")
    if args.out:
        out = _out_dir(args)
        lines = ["policy,unserved_mwh,first_failure_h,spilled_mwh"]
        lines += [f"{n},{u!r},{'' if t is None else repr(t)},{s!r}" for n, u, t, s in rows]
        (out / "compare.csv").write_text("\n".join(lines) + "\n")
    return EXIT_OK


def _verify_one(args, theorem, inst) -> int:
    v = verify_theorem(theorem, inst)
    state = "vacuous" if v.vacuous else ("pass" if v.passed else "FAIL")
    print(f"theorem {theorem}: {state}")
    print(json.dumps(v.details, default=io._jsonable, indent=2))
    return EXIT_OK if v.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    theorem = str(args.theorem).lower()
    if theorem not in THEOREMS:
        raise ValueError(f"unknown theorem {args.theorem!r}; expected one of {', '.join(THEOREMS)}")
    if args.replay:
        stored, inst = load_counterexample(args.replay)
        if stored is not None and stored != theorem:
            print(f"note: counterexample was recorded for theorem {stored}", file=sys.stderr)
        return _verify_one(args, theorem, inst)
    if args.fixture or args.fleet:
        fleet, state, signal = _load(args)
        return _verify_one(args, theorem, Instance(fleet, state, signal))
    res = run_suite(theorem, args.trials, args.seed, args.workers, out_dir=args.out)
    print(res.summary())
    for f in res.failures:
        print(f"counterexample trial {f.trial}: {f.path}")
    if res.checked < res.target:
        print(f"only {res.checked} non-vacuous instances found in {res.attempts} attempts", file=sys.stderr)
    return EXIT_OK if res.ok else EXIT_FAIL


def _common(p, out_default="out"):
    src = p.add_argument_group("instance")
    src.add_argument("--fixture", choices=FIXTURES, help="bundled instance")
    src.add_argument("--fleet", help="fleet config (JSON)")
    src.add_argument("--signal", help="demand CSV with header time_h,demand_mw")
    p.add_argument("--horizon", type=float, help="stop at this time (h); default: signal end")
    p.add_argument("--tolerance", type=float, default=EPS, help="comparison tolerance (default %(default)g)")
    p.add_argument("--out", default=out_default, help="output directory (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="storefleet", description="Schedule heterogeneous energy-store fleets.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one policy and write trajectory.csv and report.json")
    _common(p)
    p.add_argument("--policy", default="ggddf", help="ggddf|ggcdf|combined|priority:<order>|reverse-ggddf")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("transform", help="write store and demand energy-power transforms")
    _common(p)
    p.add_argument("--at", type=float, default=0.0, help="time of the transforms (state reached under ggddf)")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("minunserved", help="closed-form minimum unserved energy")
    _common(p)
    p.add_argument("--oracle", action="store_true", help="also solve the grid LP")
    p.add_argument("--cross-charging", action="store_true", help="allow cross-charging in the LP")
    p.set_defaults(func=cmd_minunserved)

    p = sub.add_parser("compare", help="tabulate unserved energy and first failure per policy")
    _common(p, out_default=None)
    p.add_argument("--policies", default=COMPARE_DEFAULT)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", help="randomised theorem checks against the LP oracle")
    _common(p, out_default="counterexamples")
    p.add_argument("--theorem", required=True, help="one of " + ", ".join(THEOREMS))
    p.add_argument("--trials", type=int, default=100, help="non-vacuous instances to check")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--replay", help="re-check a saved counterexample directory")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PolicyError, MixedEfficiencyError, SimulationError, LPError, OracleSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except HypothesisError as exc:
        print(f"hypothesis error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (io.InputError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
