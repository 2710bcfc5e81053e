"""Shared records: problem description, observations, running statistics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Protocol

import numpy as np

DesignId = int


class InsufficientObservations(ValueError):
    """A design has too few completed replications for the requested quantity."""


@dataclass(frozen=True)
class ProblemSpec:
    k: int
    true_best: DesignId | None = None

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("need at least two designs")
        if self.true_best is not None and not 1 <= self.true_best <= self.k:
            raise ValueError(f"true_best {self.true_best} outside 1..{self.k}")

    @property
    def design_ids(self) -> list[DesignId]:
        return list(range(1, self.k + 1))


@dataclass(frozen=True)
class Observation:
    """One finished replication: a performance sample and its integer duration."""

    design: DesignId
    value: float
    elapsed: int

    def __post_init__(self):
        if self.elapsed < 1:
            raise ValueError(f"elapsed must be >= 1, got {self.elapsed}")


@dataclass(frozen=True)
class DesignStats:
    """Running sample statistics of one design (Welford accumulation)."""

    completed: int = 0
    mean: float = 0.0
    m2: float = 0.0
    consumed_time: int = 0

    @property
    def variance(self) -> float:
        if self.completed < 2:
            raise InsufficientObservations("sample variance needs at least 2 replications")
        return max(self.m2 / (self.completed - 1), 0.0)

    @property
    def mean_time(self) -> float:
        if self.completed < 1:
            raise InsufficientObservations("no completed replications")
        return self.consumed_time / self.completed


def update_stats(stats: DesignStats, obs: Observation) -> DesignStats:
    n = stats.completed + 1
    delta = obs.value - stats.mean
    mean = stats.mean + delta / n
    m2 = stats.m2 + delta * (obs.value - mean)
    return DesignStats(n, mean, m2, stats.consumed_time + obs.elapsed)


def select_observed_best(all_stats: Mapping[DesignId, DesignStats]) -> DesignId:
    """Design with the smallest sample mean; ties go to the smallest id."""
    best = None
    best_mean = np.inf
    for design in sorted(all_stats):
        st = all_stats[design]
        if st.completed < 1:
            raise InsufficientObservations(f"insufficient observations for design {design}")
        if st.mean < best_mean:
            best, best_mean = design, st.mean
    if best is None:
        raise InsufficientObservations("insufficient observations")
    return best


class Simulator(Protocol):
    """Anything that can run one replication of a design.

    ``run`` must draw all its randomness from ``rng`` so that a fixed seed
    reproduces the observation.
    """

    k: int

    def run(self, design: DesignId, rng: np.random.Generator) -> Observation: ...


def format_float(x: float) -> str:
    """Shortest round-tripping decimal without an exponent (``nan`` stays ``nan``)."""
    return np.format_float_positional(float(x), unique=True, trim="-")
