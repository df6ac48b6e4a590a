"""Time the grid-LP oracle with the numba and the numpy simplex kernels.

    python3 benchmarks/bench_kernels.py [--instances 60] [--repeat 3]

Both kernels solve the same LPs; the script also reports the largest
objective difference between them.
"""

import argparse
import time

import numpy as np

from storefleet import _kernels
from storefleet.oracle.grid import MIN_UNSERVED, GridProblem, _build, _Layout
from storefleet.oracle.instances import random_instance, trial_rng
from storefleet.oracle.simplex import linprog


def problems(n, seed):
    out = []
    for j in range(n):
        inst = random_instance(trial_rng(seed, j), "any")
        gp = GridProblem.from_signal(inst.fleet, inst.initial, inst.signal, cross_charging=True, objective=MIN_UNSERVED)
        out.append(_build(gp, _Layout(gp)))
    return out


def run(lps, kernel):
    saved = _kernels.simplex_iterate
    _kernels.simplex_iterate = kernel
    try:
        t0 = time.perf_counter()
        funs = [linprog(*lp).fun for lp in lps]
        return time.perf_counter() - t0, np.array(funs)
    finally:
        _kernels.simplex_iterate = saved


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--instances", type=int, default=60)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()
    lps = problems(args.instances, args.seed)
    sizes = [lp[1].shape for lp in lps]
    print(f"{len(lps)} LPs, up to {max(s[0] for s in sizes)} rows x {max(s[1] for s in sizes)} columns")

    kernels = {"numpy": _kernels.simplex_iterate_py}
    if _kernels.simplex_iterate_nb is not None:
        run(lps[:1], _kernels.simplex_iterate_nb)  # compile
        kernels["numba"] = _kernels.simplex_iterate_nb
    results = {}
    for name, k in kernels.items():
        best = min(run(lps, k)[0] for _ in range(args.repeat))
        results[name] = (best, run(lps, k)[1])
        print(f"{name:>6}: {best * 1e3:9.1f} ms total, {best / len(lps) * 1e3:7.2f} ms per LP")
    if len(results) == 2:
        diff = np.max(np.abs(results["numpy"][1] - results["numba"][1]))
        print(f"speedup {results['numpy'][0] / results['numba'][0]:.1f}x, max objective difference {diff:.2e}")


if __name__ == "__main__":
    main()
