"""Randomised verification batches.

Attempt ``j`` of a suite draws its instance from ``trial_rng(seed, j)``, so a
result depends only on ``(theorem, trials, seed)`` and never on the number
of worker threads. For theorems whose conclusion is an implication, vacuous
attempts (antecedent false) do not count toward ``trials``.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..io import read_instance, write_instance
from .instances import (
    Instance,
    random_instance,
    random_proportional_instance,
    random_subset,
    random_theorem4_instance,
    trial_rng,
)
from .theorems import THEOREMS, HypothesisError, Verdict, verify_theorem

ATTEMPT_FACTOR = 25


def make_instance(theorem: str, seed: int, trial: int) -> Instance:
    """The ``trial``-th hypothesis-satisfying instance for ``theorem``."""
    rng = trial_rng(seed, trial)
    if theorem == "1":
        return random_instance(rng, "any")
    if theorem == "2":
        return random_instance(rng, "decreasing")
    if theorem == "3":
        inst = random_instance(rng, "increasing", full=True)
        return Instance(inst.fleet, inst.initial, inst.signal, random_subset(rng, len(inst.fleet)))
    if theorem == "c3":
        return random_instance(rng, "unimodal", full=True)
    if theorem == "4":
        return random_theorem4_instance(rng)
    if theorem == "5":
        return random_proportional_instance(rng)
    if theorem == "2b":
        return random_instance(rng, "any")
    raise ValueError(f"unknown theorem {theorem!r}; expected one of {THEOREMS}")


@dataclass
class Failure:
    trial: int
    details: dict
    instance: Instance = field(repr=False)
    path: Path | None = None


@dataclass
class SuiteResult:
    theorem: str
    seed: int
    target: int
    attempts: int = 0
    checked: int = 0
    vacuous: int = 0
    skipped: int = 0
    failures: list[Failure] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> int:
        return self.checked - len(self.failures)

    @property
    def ok(self) -> bool:
        return not self.failures and self.checked >= self.target

    def summary(self) -> str:
        return (
            f"theorem {self.theorem}: {self.passed} passed, {len(self.failures)} failed"
            f" ({self.checked} checked, {self.vacuous} vacuous, {self.skipped} skipped,"
            f" {self.attempts} attempts, {self.elapsed:.2f}s)"
        )


def _attempt(theorem: str, seed: int, trial: int):
    inst = make_instance(theorem, seed, trial)
    try:
        return inst, verify_theorem(theorem, inst)
    except HypothesisError:
        return inst, None


def run_suite(
    theorem,
    trials: int,
    seed: int = 0,
    workers: int = 1,
    out_dir=None,
    max_attempts: int | None = None,
) -> SuiteResult:
    """Check ``trials`` non-vacuous instances; failing ones are written under ``out_dir``."""
    theorem = str(theorem).lower()
    if theorem not in THEOREMS:
        raise ValueError(f"unknown theorem {theorem!r}; expected one of {THEOREMS}")
    max_attempts = ATTEMPT_FACTOR * max(trials, 1) if max_attempts is None else max_attempts
    res = SuiteResult(theorem, seed, trials)
    t0 = time.perf_counter()
    batch = max(1, 4 * workers)
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        j = 0
        while res.checked < trials and j < max_attempts:
            idx = range(j, min(j + batch, max_attempts))
            if pool is None:
                out = [_attempt(theorem, seed, i) for i in idx]
            else:
                out = list(pool.map(lambda i: _attempt(theorem, seed, i), idx))
            for i, (inst, v) in zip(idx, out):
                if res.checked >= trials:
                    break
                res.attempts += 1
                _tally(res, i, inst, v)
            j = idx.stop
    finally:
        if pool is not None:
            pool.shutdown()
    res.elapsed = time.perf_counter() - t0
    if out_dir is not None:
        for f in res.failures:
            f.path = save_counterexample(Path(out_dir) / f"theorem{theorem}-seed{seed}-trial{f.trial}", theorem, f)
    return res


def _tally(res: SuiteResult, trial: int, inst: Instance, v: Verdict | None) -> None:
    if v is None:
        res.skipped += 1
    elif v.vacuous:
        res.vacuous += 1
    else:
        res.checked += 1
        if not v.passed:
            res.failures.append(Failure(trial, v.details, inst))


def save_counterexample(directory, theorem: str, failure: Failure) -> Path:
    inst = failure.instance
    meta = {
        "theorem": theorem,
        "trial": failure.trial,
        "subset": None if inst.subset is None else list(inst.subset),
        "details": failure.details,
    }
    return write_instance(directory, inst.fleet, inst.initial, inst.signal, meta)


def load_counterexample(directory) -> tuple[str | None, Instance]:
    directory = Path(directory)
    fleet, state, signal = read_instance(directory)
    meta_path = directory / "meta.json"
    theorem, subset = None, None
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        theorem = meta.get("theorem")
        subset = None if meta.get("subset") is None else tuple(meta["subset"])
    return theorem, Instance(fleet, state, signal, subset)
