import math

import numpy as np
import pytest

from ocbas.allocation import Policy, PolicyConfig
from ocbas.core import Observation
from ocbas.harness import (
    CSV_HEADER,
    ExperimentPlan,
    ExperimentResult,
    empirical_pmf,
    read_csv,
    replication_seed,
    run_pcs_experiment,
    write_csv,
)
from ocbas.testbeds import SyntheticTestbed, UniformSpread


class NoiselessTestbed:
    k = 5
    true_best = 3

    def run(self, design, rng):
        return Observation(design, abs(design - 3) + 0.0, int(rng.integers(5, 15)))


class BrokenTestbed:
    k = 3
    true_best = 1

    def run(self, design, rng):
        raise RuntimeError("simulator crashed")


def _plan(testbed, budgets=(1000, 2000), reps=20, seed=1):
    pols = {p: PolicyConfig.defaults(p, max(budgets)) for p in Policy}
    return ExperimentPlan(testbed, pols, list(budgets), reps, seed)


def test_zero_noise_pcs_is_one():
    result = run_pcs_experiment(_plan(NoiselessTestbed()))
    assert len(result.rows) == 6
    assert all(r.pcs == 1.0 and r.std_err == 0.0 for r in result.rows)
    assert not result.errors


def test_results_independent_of_workers():
    plan = _plan(SyntheticTestbed(UniformSpread(10)), reps=30)
    a = run_pcs_experiment(plan, workers=1)
    b = run_pcs_experiment(plan, workers=3)
    assert a.rows == b.rows


def test_seeds_are_distinct():
    keys = {tuple(replication_seed(0, p, t, r).generate_state(2))
            for p in Policy for t in (1000, 2000) for r in range(10)}
    assert len(keys) == 60


def test_consumed_time_bounds():
    tb = SyntheticTestbed(UniformSpread(10))
    result = run_pcs_experiment(_plan(tb, reps=10))
    for r in result.rows:
        assert r.budget <= r.mean_consumed_time <= r.budget + tb.k * 19 + 10 * 19


def test_failed_cell_is_recorded():
    result = run_pcs_experiment(_plan(BrokenTestbed(), budgets=(500,), reps=2))
    assert len(result.errors) == 3
    assert all(math.isnan(r.pcs) for r in result.rows)
    assert "simulator crashed" in next(iter(result.errors.values()))


def test_plan_validation():
    tb = SyntheticTestbed(UniformSpread(1))
    with pytest.raises(ValueError):
        _plan(tb, budgets=(2000, 1000))
    with pytest.raises(ValueError):
        _plan(tb, reps=0)


def test_csv_round_trip(tmp_path):
    result = run_pcs_experiment(_plan(SyntheticTestbed(UniformSpread(5)), reps=7))
    path = tmp_path / "pcs.csv"
    write_csv(result, path)
    assert path.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    assert read_csv(path) == result.rows
    assert result.pcs("ocbas", 2000) == result.rows[-1].pcs

    empty = tmp_path / "empty.csv"
    write_csv(ExperimentResult(), empty)
    assert empty.read_text() == ",".join(CSV_HEADER) + "\n"
    assert read_csv(empty) == []
    with pytest.raises(OSError):
        write_csv(result, tmp_path / "missing" / "x.csv")


def test_empirical_pmf(rng):
    pmf = empirical_pmf(SyntheticTestbed(UniformSpread(2)), 1, 10_000, rng)
    assert set(pmf) == {9, 10, 11}
    assert sum(pmf.values()) == pytest.approx(1.0)
    for p in pmf.values():
        assert abs(p - 1 / 3) < 4 * math.sqrt(2 / 9 / 10_000)


@pytest.mark.slow
def test_pcs_increases_with_budget():
    tb = SyntheticTestbed(UniformSpread(10))
    pols = {Policy.OCBAS: PolicyConfig.defaults(Policy.OCBAS, 8000)}
    result = run_pcs_experiment(ExperimentPlan(tb, pols, [1000, 8000], 300, 5))
    lo, hi = result.rows
    assert hi.pcs > lo.pcs - 3 * math.hypot(lo.std_err, hi.std_err)
    assert hi.pcs > lo.pcs
