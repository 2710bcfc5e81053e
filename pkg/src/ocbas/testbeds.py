"""Experiment testbeds.

* ``SyntheticTestbed``: 10 designs with true means ``0, 1, ..., 9``, N(0, 6^2)
  noise and a configurable replication-duration model.
* ``SmokeTestbed``: placement of 3 smoke sensors on a 3x3 set of candidate
  cells of an 11x11 lattice; the performance of a replication is the
  detection time, which is also its duration.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np
from scipy.special import ndtr

from . import _backend
from .core import DesignId, Observation, format_float
from .renewal import DiscretePmf

NOISE_SIGMA = 6.0
N_SYNTHETIC = 10

GRID = 11
SENSOR_COORDS = (2, 5, 8)
DEFAULT_HORIZON = 10**6

_MOVES = ((1, 0), (-1, 0), (0, 1), (0, -1))


class CensoredRunError(RuntimeError):
    """A smoke replication reached the horizon without a detection."""


# ---------------------------------------------------------------------------
# replication-duration models

@dataclass(frozen=True)
class UniformSpread:
    """Durations uniform on ``{11 - j, ..., 9 + j}`` (mean 10) for every design."""

    j: int

    def __post_init__(self):
        if not 1 <= self.j <= 10:
            raise ValueError("spread index j must be in 1..10")

    def pmf(self, design: DesignId) -> DiscretePmf:
        return DiscretePmf.uniform(11 - self.j, 9 + self.j)


@dataclass(frozen=True)
class TruncatedGaussian:
    """Discretized normal on ``{1, ..., 19}`` centred near ``design - 1``, scale ``j``."""

    j: int

    def __post_init__(self):
        if not 1 <= self.j <= 10:
            raise ValueError("spread index j must be in 1..10")

    def pmf(self, design: DesignId) -> DiscretePmf:
        return truncated_gaussian_pmf(design, self.j)


@dataclass(frozen=True)
class CorrelatedTwoPoint:
    """Durations 5 or 15, linked to the sign of the noise through ``p``."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must be in [0, 1]")

    def pmf(self, design: DesignId) -> DiscretePmf:
        probs = np.zeros(11)
        probs[0] = probs[-1] = 0.5
        return DiscretePmf(5, probs)


def truncated_gaussian_pmf(design: DesignId, j: float) -> DiscretePmf:
    x = np.arange(1, 20, dtype=np.float64)
    w = ndtr((x - design + 1.5) / j) - ndtr((x - design + 0.5) / j)
    return DiscretePmf.from_weights(1, w)


def sample_uniform_time(j: int, rng: np.random.Generator) -> int:
    return int(rng.integers(11 - j, 9 + j, endpoint=True))


def sample_truncated_gaussian_time(design: DesignId, j: int, rng: np.random.Generator) -> int:
    f = truncated_gaussian_pmf(design, j)
    return int(f.support_min + rng.choice(f.probs.size, p=f.probs))


def sample_correlated(design: DesignId, p: float, rng: np.random.Generator,
                      noise_sigma: float = NOISE_SIGMA) -> Observation:
    w = rng.normal(0.0, noise_sigma)
    u = rng.random()
    long_run = u < p if w >= 0 else u < 1.0 - p
    return Observation(design, design - 1 + w, 15 if long_run else 5)


@dataclass(frozen=True)
class SyntheticTestbed:
    time_model: UniformSpread | TruncatedGaussian | CorrelatedTwoPoint
    noise_sigma: float = NOISE_SIGMA
    k: int = N_SYNTHETIC

    @property
    def true_best(self) -> DesignId:
        return 1

    def true_mean(self, design: DesignId) -> float:
        return float(design - 1)

    @cached_property
    def _samplers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        out = []
        for d in range(1, self.k + 1):
            f = self.time_model.pmf(d)
            out.append((f.values, np.cumsum(f.probs)))
        return out

    def run(self, design: DesignId, rng: np.random.Generator) -> Observation:
        tm = self.time_model
        if isinstance(tm, CorrelatedTwoPoint):
            return sample_correlated(design, tm.p, rng, self.noise_sigma)
        w = rng.normal(0.0, self.noise_sigma)
        if isinstance(tm, UniformSpread):
            t = sample_uniform_time(tm.j, rng)
        else:
            values, cum = self._samplers[design - 1]
            i = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
            t = int(values[min(i, values.size - 1)])
        return Observation(design, design - 1 + w, t)


# ---------------------------------------------------------------------------
# smoke detection

def sensor_cell(sensor: int) -> tuple[int, int]:
    """Lattice ``(x, y)`` of candidate ``sensor`` (1..9, row-major over the 3x3 set)."""
    if not 1 <= sensor <= 9:
        raise ValueError("sensor ids are 1..9")
    return SENSOR_COORDS[(sensor - 1) % 3], SENSOR_COORDS[(sensor - 1) // 3]


def sensor_mask(placement: Iterable[int]) -> np.ndarray:
    mask = np.zeros(GRID * GRID, dtype=np.int8)
    for s in placement:
        x, y = sensor_cell(s)
        mask[y * GRID + x] = 1
    return mask


def smoke_step(pos: tuple[int, int], source: tuple[int, int], rng: np.random.Generator) -> tuple[int, int]:
    """Move one particle; a move off the lattice leaves it where it is."""
    w = step_probabilities(pos, source)
    d = int(rng.choice(4, p=w))
    nx, ny = pos[0] + _MOVES[d][0], pos[1] + _MOVES[d][1]
    if 0 <= nx < GRID and 0 <= ny < GRID:
        return nx, ny
    return pos


def step_probabilities(pos: tuple[int, int], source: tuple[int, int]) -> np.ndarray:
    """Probabilities of the +x, -x, +y, -y moves, proportional to the distance to the source."""
    x, y = pos
    w = np.array([np.hypot(x + dx - source[0], y + dy - source[1]) for dx, dy in _MOVES])
    return w / w.sum()


def enumerate_placements() -> list[tuple[int, int, int]]:
    return list(itertools.combinations(range(1, 10), 3))


def _d4_permutations() -> list[tuple[int, ...]]:
    """The 8 symmetries of the 3x3 candidate array as permutations of sensor ids."""
    perms = []
    for rot in range(4):
        for flip in (False, True):
            perm = [0] * 10
            for s in range(1, 10):
                r, c = divmod(s - 1, 3)
                if flip:
                    c = 2 - c
                for _ in range(rot):
                    r, c = c, 2 - r
                perm[s] = 3 * r + c + 1
            perms.append(tuple(perm))
    return perms


def symmetry_orbits(placements: Iterable[tuple[int, ...]] | None = None) -> dict[tuple[int, ...], list[tuple[int, ...]]]:
    """Orbits of placements under the dihedral group, keyed by lexicographic-minimum representative."""
    if placements is None:
        placements = enumerate_placements()
    perms = _d4_permutations()
    orbits: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
    seen = set()
    for pl in placements:
        pl = tuple(sorted(pl))
        if pl in seen:
            continue
        orbit = sorted({tuple(sorted(g[s] for s in pl)) for g in perms})
        seen.update(orbit)
        orbits[orbit[0]] = orbit
    return dict(sorted(orbits.items()))


def symmetry_reduce(placements: Iterable[tuple[int, ...]] | None = None) -> list[tuple[int, ...]]:
    return list(symmetry_orbits(placements))


def simulate_response_times(placement: Iterable[int], n: int, rng: np.random.Generator,
                            horizon: int = DEFAULT_HORIZON, interior_fire: bool = True) -> np.ndarray:
    """Detection times of ``n`` independent fires for one placement.

    Each slot spawns a particle at the source, then every particle takes one
    step; the run ends at the first slot in which a particle sits on a sensor.
    A source on a sensor is detected in slot 1.
    """
    placement = tuple(placement)
    if len(set(placement)) != 3:
        raise ValueError("a placement has exactly 3 distinct sensors")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    out = _backend.smoke_response_times(sensor_mask(placement), int(n), rng.bit_generator, int(horizon),
                                        interior_fire)
    if n and out.min() < 0:
        raise CensoredRunError(f"no detection within {horizon} slots for placement {placement}")
    return out


@dataclass(frozen=True)
class SmokeTestbed:
    """The 16 symmetry-distinct placements as designs 1..16."""

    horizon: int = DEFAULT_HORIZON
    interior_fire: bool = True
    # representative with the smallest mean detection time (see tests)
    true_best_placement: tuple[int, int, int] = (1, 6, 8)

    @cached_property
    def placements(self) -> list[tuple[int, ...]]:
        return symmetry_reduce()

    @property
    def k(self) -> int:
        return len(self.placements)

    @property
    def true_best(self) -> DesignId:
        return self.placements.index(self.true_best_placement) + 1

    def run(self, design: DesignId, rng: np.random.Generator) -> Observation:
        t = int(simulate_response_times(self.placements[design - 1], 1, rng, self.horizon, self.interior_fire)[0])
        return Observation(design, float(t), t)


@dataclass(frozen=True)
class DesignEstimate:
    index: int
    design: tuple[int, ...]
    mean_response: float
    std_err: float
    reps: int


def estimate_design_means(reps: int, rng_or_seed, testbed: SmokeTestbed | None = None,
                          workers: int = 1) -> list[DesignEstimate]:
    """Mean detection time of every representative placement.

    Each design gets its own child stream of ``rng_or_seed`` so the table does
    not depend on evaluation order or worker count.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    testbed = testbed or SmokeTestbed()
    if isinstance(rng_or_seed, np.random.SeedSequence):
        ss = rng_or_seed
    elif isinstance(rng_or_seed, np.random.Generator):
        ss = rng_or_seed.bit_generator.seed_seq
    else:
        ss = np.random.SeedSequence(rng_or_seed)
    children = ss.spawn(testbed.k)
    jobs = [(pl, reps, child, testbed.horizon, testbed.interior_fire)
            for pl, child in zip(testbed.placements, children)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as ex:
            stats = list(ex.map(_design_mean_job, jobs))
    else:
        stats = [_design_mean_job(job) for job in jobs]
    return [DesignEstimate(i + 1, pl, m, se, reps) for i, (pl, (m, se)) in enumerate(zip(testbed.placements, stats))]


def _design_mean_job(job) -> tuple[float, float]:
    placement, reps, ss, horizon, interior = job
    t = simulate_response_times(placement, reps, np.random.default_rng(ss), horizon, interior)
    se = float(t.std(ddof=1) / np.sqrt(reps)) if reps > 1 else float("nan")
    return float(t.mean()), se


def write_design_table(rows: list[DesignEstimate], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["index", "design", "mean_response", "std_err", "reps"])
    for r in rows:
        w.writerow([r.index, ",".join(map(str, r.design)), format_float(r.mean_response), format_float(r.std_err), r.reps])
