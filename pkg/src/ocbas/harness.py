"""Macro-replication experiments estimating the probability of correct selection."""

from __future__ import annotations

import csv
import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .allocation import Policy, PolicyConfig, run_sequential
from .core import DesignId, Simulator, format_float

log = logging.getLogger(__name__)

CSV_HEADER = ["policy", "budget", "pcs", "std_err", "macro_reps", "mean_consumed_time"]
_POLICY_TAG = {Policy.EA: 0, Policy.OCBA: 1, Policy.OCBAS: 2}


@dataclass(frozen=True)
class ExperimentPlan:
    testbed: Simulator
    policies: dict[Policy, PolicyConfig]
    budgets: Sequence[int]
    macro_reps: int
    base_seed: int = 0

    def __post_init__(self):
        if self.macro_reps < 1:
            raise ValueError("macro_reps must be >= 1")
        b = list(self.budgets)
        if any(y <= x for x, y in zip(b, b[1:])):
            raise ValueError("budgets must be strictly increasing")
        if getattr(self.testbed, "true_best", None) is None:
            raise ValueError("testbed must expose its true best design")


@dataclass(frozen=True)
class ResultRow:
    policy: Policy
    budget: int
    pcs: float
    std_err: float
    macro_reps: int
    mean_consumed_time: float


@dataclass
class ExperimentResult:
    rows: list[ResultRow] = field(default_factory=list)
    errors: dict[tuple[Policy, int], str] = field(default_factory=dict)

    def pcs(self, policy: Policy | str, budget: int) -> float:
        policy = Policy(policy)
        for r in self.rows:
            if r.policy is policy and r.budget == budget:
                return r.pcs
        raise KeyError((policy, budget))


def replication_seed(base_seed: int, policy: Policy, budget: int, rep: int) -> np.random.SeedSequence:
    """Stream for one macro-replication, independent of scheduling."""
    return np.random.SeedSequence([int(base_seed), _POLICY_TAG[Policy(policy)], int(budget), int(rep)])


def _run_chunk(args) -> list[tuple[bool, int]]:
    testbed, cfg, base_seed, reps = args
    out = []
    for rep in reps:
        rng = np.random.default_rng(replication_seed(base_seed, cfg.policy, int(cfg.total_budget), rep))
        report = run_sequential(testbed, cfg, rng)
        out.append((report.selected == testbed.true_best, report.consumed_time))
    return out


def _chunks(n: int, size: int) -> list[range]:
    return [range(i, min(i + size, n)) for i in range(0, n, size)]


def run_pcs_experiment(plan: ExperimentPlan, workers: int = 1) -> ExperimentResult:
    """Estimate PCS for every (policy, budget) cell of ``plan``.

    Results are assembled by replication index, so they do not depend on
    ``workers``.
    """
    cells = []
    for policy, template in plan.policies.items():
        for budget in plan.budgets:
            cfg = PolicyConfig(template.policy, template.warmup, template.increment, budget)
            cells.append(cfg)

    result = ExperimentResult()
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for cfg in cells:
            budget = int(cfg.total_budget)
            try:
                if pool is None:
                    outcomes = _run_chunk((plan.testbed, cfg, plan.base_seed, range(plan.macro_reps)))
                else:
                    size = max(1, math.ceil(plan.macro_reps / (4 * workers)))
                    jobs = [(plan.testbed, cfg, plan.base_seed, r) for r in _chunks(plan.macro_reps, size)]
                    outcomes = [o for part in pool.map(_run_chunk, jobs) for o in part]
            except Exception as exc:  # record and move on to the next cell
                log.error("cell %s T=%d failed: %s", cfg.policy.value, budget, exc)
                result.errors[(cfg.policy, budget)] = f"{type(exc).__name__}: {exc}"
                result.rows.append(ResultRow(cfg.policy, budget, math.nan, math.nan, plan.macro_reps, math.nan))
                continue
            hits = sum(ok for ok, _ in outcomes)
            p = hits / plan.macro_reps
            result.rows.append(ResultRow(
                policy=cfg.policy,
                budget=budget,
                pcs=p,
                std_err=math.sqrt(p * (1.0 - p) / plan.macro_reps),
                macro_reps=plan.macro_reps,
                mean_consumed_time=sum(t for _, t in outcomes) / plan.macro_reps,
            ))
    finally:
        if pool is not None:
            pool.shutdown()
    return result


def empirical_pmf(testbed: Simulator, design: DesignId, reps: int, rng: np.random.Generator) -> dict[int, float]:
    """Relative frequencies of the replication durations of one design."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    counts = Counter(testbed.run(design, rng).elapsed for _ in range(reps))
    return {t: counts[t] / reps for t in sorted(counts)}


def format_rows(result: ExperimentResult) -> list[list[str]]:
    return [[r.policy.value, str(r.budget), format_float(r.pcs), format_float(r.std_err), str(r.macro_reps),
             format_float(r.mean_consumed_time)] for r in result.rows]


def write_csv(result: ExperimentResult, path_or_file) -> None:
    """Write one row per cell; floats are written in plain decimal and round-trip exactly."""
    if hasattr(path_or_file, "write"):
        _write(result, path_or_file)
        return
    path = Path(path_or_file)
    try:
        with path.open("w", newline="") as fh:
            _write(result, fh)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _write(result: ExperimentResult, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(format_rows(result))


def read_csv(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        return [ResultRow(Policy(r["policy"]), int(r["budget"]), float(r["pcs"]), float(r["std_err"]),
                          int(r["macro_reps"]), float(r["mean_consumed_time"])) for r in csv.DictReader(fh)]
