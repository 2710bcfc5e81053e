import math
from collections import Counter

import numpy as np
import pytest

from ocbas import _pykernels
from ocbas.testbeds import (
    GRID,
    CensoredRunError,
    CorrelatedTwoPoint,
    SmokeTestbed,
    SyntheticTestbed,
    TruncatedGaussian,
    UniformSpread,
    _d4_permutations,
    enumerate_placements,
    estimate_design_means,
    sample_correlated,
    sensor_cell,
    sensor_mask,
    simulate_response_times,
    smoke_step,
    step_probabilities,
    symmetry_orbits,
    symmetry_reduce,
    truncated_gaussian_pmf,
    write_design_table,
)

# representatives listed in the reference table of mean response times
TABLE1_DESIGNS = [
    (1, 2, 3), (1, 2, 4), (1, 2, 5), (1, 2, 6), (1, 2, 7), (1, 2, 8), (1, 2, 9), (1, 3, 5),
    (1, 3, 7), (1, 3, 8), (1, 5, 6), (1, 5, 9), (1, 6, 8), (2, 4, 5), (2, 4, 6), (2, 5, 8),
]


# -- synthetic testbed -----------------------------------------------------------

def test_uniform_spread_support(rng):
    tb = SyntheticTestbed(UniformSpread(1))
    assert {tb.run(3, rng).elapsed for _ in range(200)} == {10}
    wide = SyntheticTestbed(UniformSpread(10))
    seen = Counter(wide.run(1, rng).elapsed for _ in range(20_000))
    assert set(seen) == set(range(1, 20))
    with pytest.raises(ValueError):
        UniformSpread(0)


@pytest.mark.parametrize("model", [UniformSpread(10), TruncatedGaussian(5), CorrelatedTwoPoint(0.3)])
def test_sample_means_match_true_means(model, rng):
    tb = SyntheticTestbed(model)
    n = 20_000
    for d in (1, 5, 10):
        obs = [tb.run(d, rng) for _ in range(n)]
        vals = np.array([o.value for o in obs])
        times = np.array([o.elapsed for o in obs])
        assert abs(vals.mean() - tb.true_mean(d)) < 3 * 6 / math.sqrt(n) + 0.01
        mu = model.pmf(d).mean
        assert abs(times.mean() - mu) < 3 * times.std() / math.sqrt(n) + 1e-9


def test_truncated_gaussian_pmf():
    for i in (1, 10, 19):
        for j in (1, 5, 10):
            f = truncated_gaussian_pmf(i, j)
            assert f.probs.sum() == pytest.approx(1.0, abs=1e-12)
            assert (f.support_min, f.support_max) == (1, 19)
    f = truncated_gaussian_pmf(10, 1)
    assert int(f.values[np.argmax(f.probs)]) == 9
    # mass is an increment of the normal CDF, renormalized
    from scipy.stats import norm
    raw = norm.cdf((np.arange(1, 20) - 8.5) / 3) - norm.cdf((np.arange(1, 20) - 9.5) / 3)
    np.testing.assert_allclose(truncated_gaussian_pmf(10, 3).probs, raw / raw.sum(), rtol=1e-12)


def test_correlated_model(rng):
    n = 40_000
    for p in (0.0, 0.5, 1.0):
        obs = [sample_correlated(4, p, rng) for _ in range(n)]
        w = np.array([o.value - 3 for o in obs])
        long_run = np.array([o.elapsed == 15 for o in obs])
        assert set(o.elapsed for o in obs) <= {5, 15}
        assert abs(long_run.mean() - 0.5) < 4 * 0.5 / math.sqrt(n)
        cond = long_run[w >= 0].mean()
        se = math.sqrt(max(p * (1 - p), 0.25 / n) / (w >= 0).sum())
        assert abs(cond - p) < 4 * se + 1e-12
    pmf = CorrelatedTwoPoint(0.9).pmf(1)
    assert pmf.as_dict()[5] == pmf.as_dict()[15] == 0.5
    assert pmf.mean == 10.0


# -- smoke lattice -----------------------------------------------------------------

def test_sensor_layout():
    assert sensor_cell(1) == (2, 2)
    assert sensor_cell(3) == (8, 2)
    assert sensor_cell(5) == (5, 5)
    assert sensor_cell(7) == (2, 8)
    assert sensor_mask((1, 5, 9)).sum() == 3
    assert sensor_mask((1,))[2 * GRID + 2] == 1
    with pytest.raises(ValueError):
        sensor_cell(10)


def test_step_probabilities():
    np.testing.assert_allclose(step_probabilities((5, 5), (5, 5)), [0.25] * 4)
    w = step_probabilities((5, 0), (5, 5))
    r26 = math.sqrt(26)
    np.testing.assert_allclose(w, np.array([r26, r26, 4, 6]) / (2 * r26 + 10), rtol=1e-12)
    # the -y move leaves the lattice, so that is the stay probability
    assert w[3] == pytest.approx(6 / (2 * r26 + 10))


def test_particles_stay_on_lattice(rng):
    for src in [(0, 0), (10, 10), (5, 5)]:
        pos = src
        for _ in range(500):
            pos = smoke_step(pos, src, rng)
            assert 0 <= pos[0] < GRID and 0 <= pos[1] < GRID


class _StubRng:
    def __init__(self, draws):
        self.draws = list(draws)

    def random(self):
        return self.draws.pop(0)


def test_source_on_sensor_is_detected_in_first_slot():
    mask = [bool(v) for v in sensor_mask((1, 2, 3))]
    # interior index 10 is (2, 2), the cell of sensor 1
    assert _pykernels._one_response(mask, _StubRng([10.5 / 81]), 100, True) == 1
    # index 0 is (1, 1); the first move +x lands next to, not on, the sensor
    assert _pykernels._one_response(mask, _StubRng([0.5 / 81, 0.0] + [0.999] * 1000), 3, True) != 1


def test_first_slot_frequency(kernels):
    mask = sensor_mask((1, 5, 9))
    t = kernels.smoke_response_times(mask, 40_000, np.random.PCG64(5), 10**6, True)
    # a fire on one of the 3 sensors, or on one of their 12 neighbours whose
    # first (uniform) move lands on the sensor
    expected = 3 / 81 + 12 / 81 * 0.25
    p = (t == 1).mean()
    assert abs(p - expected) < 4 * math.sqrt(expected * (1 - expected) / t.size)
    assert t.min() >= 1


def test_backends_agree():
    from ocbas import _ckernels

    mask = sensor_mask((1, 6, 8))
    for interior in (True, False):
        a = _pykernels.smoke_response_times(mask, 300, np.random.PCG64(11), 10**6, interior)
        b = _ckernels.smoke_response_times(mask, 300, np.random.PCG64(11), 10**6, interior)
        np.testing.assert_array_equal(a, b)


def test_censoring(rng):
    with pytest.raises(CensoredRunError):
        # with a horizon of 1 almost every fire goes undetected
        simulate_response_times((1, 2, 3), 200, rng, horizon=1)
    with pytest.raises(ValueError):
        simulate_response_times((1, 1, 2), 1, rng)


# -- symmetry ----------------------------------------------------------------------

def test_placement_counts():
    placements = enumerate_placements()
    assert len(placements) == 84 == math.comb(9, 3)
    orbits = symmetry_orbits()
    assert len(orbits) == 16
    assert sum(len(o) for o in orbits.values()) == 84
    assert sorted(p for o in orbits.values() for p in o) == sorted(placements)


def test_group_is_dihedral():
    perms = _d4_permutations()
    assert len(set(perms)) == 8
    as_set = set(perms)
    for g in perms:
        for h in perms:
            assert tuple(g[h[s]] if s else 0 for s in range(10)) in as_set
    # Burnside: the mean number of fixed placements equals the orbit count
    fixed = sum(sum(tuple(sorted(g[s] for s in pl)) == pl for pl in enumerate_placements()) for g in perms)
    assert fixed / 8 == 16


def test_representatives_match_reference_list():
    assert symmetry_reduce() == TABLE1_DESIGNS
    tb = SmokeTestbed()
    assert tb.k == 16
    assert tb.placements[tb.true_best - 1] == (1, 6, 8)


def test_orbit_sizes_divide_group_order():
    for rep, orbit in symmetry_orbits().items():
        assert 8 % len(orbit) == 0
        assert rep == min(orbit)


# -- design table ------------------------------------------------------------------

def test_design_table_independent_of_workers(tmp_path):
    tb = SmokeTestbed()
    a = estimate_design_means(200, 3, tb, workers=1)
    b = estimate_design_means(200, 3, tb, workers=2)
    assert a == b
    assert all(6 < r.mean_response < 16 for r in a)
    with open(tmp_path / "t.csv", "w") as fh:
        write_design_table(a, fh)
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "index,design,mean_response,std_err,reps"
    assert len(lines) == 17
    assert lines[1].startswith('1,"1,2,3",')


def test_smoke_run_returns_time_as_value(rng):
    tb = SmokeTestbed()
    obs = tb.run(13, rng)
    assert obs.value == float(obs.elapsed)
