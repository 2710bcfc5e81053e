"""Budget allocation rules and the sequential allocation driver.

Three policies share one driver:

* ``EA``    splits simulation time equally.
* ``OCBA``  allocates replication *counts* with the classic rule.
* ``OCBAS`` allocates simulation *time*; the classic rule with each noise
  variance multiplied by the mean replication duration.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .core import DesignId, DesignStats, InsufficientObservations, Simulator, select_observed_best, update_stats

VARIANCE_FLOOR = 1e-12
DELTA_REL_EPS = 1e-6
_TIME_TOL = 1e-9


class Policy(str, enum.Enum):
    EA = "ea"
    OCBA = "ocba"
    OCBAS = "ocbas"


@dataclass(frozen=True)
class AllocationInputs:
    """Sample means, variances and mean durations; arrays indexed by design - 1."""

    means: np.ndarray
    variances: np.ndarray
    mean_times: np.ndarray
    stage_total: float
    best: DesignId | None = None

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        variances = np.asarray(self.variances, dtype=np.float64)
        mean_times = np.asarray(self.mean_times, dtype=np.float64)
        if not (means.shape == variances.shape == mean_times.shape) or means.ndim != 1:
            raise ValueError("means, variances and mean_times must be 1-D and equally long")
        if means.size < 2:
            raise ValueError("need at least two designs")
        if np.any(variances < 0) or np.any(mean_times <= 0):
            raise ValueError("variances must be >= 0 and mean_times > 0")
        best = self.best
        if best is None:
            best = int(np.argmin(means)) + 1
        elif means[best - 1] > means.min():
            raise ValueError(f"design {best} does not have the minimal mean")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)
        object.__setattr__(self, "mean_times", mean_times)
        object.__setattr__(self, "best", best)

    @property
    def k(self) -> int:
        return self.means.size


@dataclass(frozen=True)
class AllocationVector:
    budgets: np.ndarray

    @property
    def total(self) -> float:
        return float(self.budgets.sum())

    def __getitem__(self, design: DesignId) -> float:
        return float(self.budgets[design - 1])

    def as_dict(self) -> dict[DesignId, float]:
        return {i + 1: float(b) for i, b in enumerate(self.budgets)}


def _scaled(weights: np.ndarray, total: float) -> np.ndarray:
    return weights * (total / weights.sum())


def theorem2_weights(inputs: AllocationInputs) -> np.ndarray:
    """Unnormalized optimal time shares.

    Non-best designs get ``s_i / delta_i^2`` with ``s_i = sigma_i^2 mu_i``;
    the observed best gets ``sqrt(s_b * sum_i w_i^2 / s_i)``.
    """
    b = inputs.best - 1
    s = np.maximum(inputs.variances, VARIANCE_FLOOR) * inputs.mean_times
    eps = DELTA_REL_EPS * max(1.0, abs(inputs.means[b]))
    delta = np.maximum(np.abs(inputs.means - inputs.means[b]), eps)
    w = s / delta**2
    others = np.arange(inputs.k) != b
    w[b] = np.sqrt(s[b] * np.sum(w[others] ** 2 / s[others]))
    return w


def allocate_theorem2(inputs: AllocationInputs) -> AllocationVector:
    if not inputs.stage_total > 0:
        raise ValueError("stage_total must be positive")
    return AllocationVector(_scaled(theorem2_weights(inputs), inputs.stage_total))


def allocate_equal(k: int, stage_total: float) -> AllocationVector:
    if k < 1:
        raise ValueError("k must be >= 1")
    return AllocationVector(np.full(k, stage_total / k))


def round_preserving_total(shares: np.ndarray, total: int) -> np.ndarray:
    """Largest-remainder rounding of nonnegative ``shares`` to integers summing to ``total``."""
    base = np.floor(shares).astype(np.int64)
    short = int(total - base.sum())
    if short > 0:
        # stable sort keeps ties in design order
        order = np.argsort(-(shares - base), kind="stable")
        base[order[:short]] += 1
    return base


def allocate_ocba_classic(means, variances, total_reps: int, best: DesignId | None = None) -> np.ndarray:
    """Classic replication-count allocation, rounded to integers."""
    means = np.asarray(means, dtype=np.float64)
    if total_reps < means.size:
        raise ValueError(f"total_reps {total_reps} < number of designs {means.size}")
    inputs = AllocationInputs(means, variances, np.ones_like(means), float(total_reps), best)
    return round_preserving_total(allocate_theorem2(inputs).budgets, total_reps)


def apcs(inputs: AllocationInputs, budgets: AllocationVector) -> float:
    """Bonferroni approximation ``1 - sum_i Phi(delta_bi / sigma_bi)``; not clipped."""
    t = np.asarray(budgets.budgets, dtype=np.float64)
    if np.any(t <= 0):
        raise ValueError("all budgets must be positive")
    b = inputs.best - 1
    s = inputs.variances * inputs.mean_times
    others = np.arange(inputs.k) != b
    sig = np.sqrt(s[b] / t[b] + s[others] / t[others])
    delta = inputs.means[b] - inputs.means[others]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sig > 0, delta / sig, np.where(delta < 0, -np.inf, 0.0))
    return float(1.0 - ndtr(z).sum())


def constrained_targets(weights: np.ndarray, floors: np.ndarray, total: float) -> np.ndarray:
    """Split ``total`` proportionally to ``weights`` without going below ``floors``.

    Designs whose proportional share would drop under their floor are pinned
    at it and the remainder is re-split among the others, so the result sums
    to ``total`` whenever ``total >= floors.sum()``.
    """
    free = np.ones(weights.size, dtype=bool)
    while True:
        rem = total - floors[~free].sum()
        share = rem * weights[free] / weights[free].sum()
        low = share < floors[free]
        if not low.any():
            break
        idx = np.flatnonzero(free)[low]
        free[idx] = False
        if not free.any():
            return floors.astype(np.float64)
    out = floors.astype(np.float64)
    out[free] = share
    return out


@dataclass(frozen=True)
class PolicyConfig:
    """Warm-up and increment are time units for EA/OCBAS, replications for OCBA."""

    policy: Policy
    warmup: int
    increment: int
    total_budget: float

    def __post_init__(self):
        object.__setattr__(self, "policy", Policy(self.policy))
        if self.warmup <= 0 or self.increment <= 0:
            raise ValueError("warmup and increment must be positive")
        if self.total_budget <= 0:
            raise ValueError("total_budget must be positive")

    @classmethod
    def defaults(cls, policy: Policy | str, total_budget: float, smoke: bool = False) -> PolicyConfig:
        policy = Policy(policy)
        if policy is Policy.OCBA:
            return cls(policy, 20 if smoke else 5, 10, total_budget)
        return cls(policy, 200 if smoke else 50, 100, total_budget)


@dataclass
class SelectionReport:
    selected: DesignId
    stats: dict[DesignId, DesignStats]
    consumed_time: int
    iterations: int
    targets: list[np.ndarray] = field(default_factory=list, repr=False)


def _allocation_inputs(stats: dict[DesignId, DesignStats], k: int, unit_time: bool) -> AllocationInputs:
    ordered = [stats[d] for d in range(1, k + 1)]
    means = np.array([st.mean for st in ordered])
    variances = np.array([st.variance for st in ordered])
    mean_times = np.ones(k) if unit_time else np.array([st.mean_time for st in ordered])
    return AllocationInputs(means, variances, mean_times, 1.0, select_observed_best(stats))


def run_sequential(sim: Simulator, cfg: PolicyConfig, rng: np.random.Generator,
                   record_targets: bool = False) -> SelectionReport:
    """Run one sequential allocation from scratch and return the selected design."""
    k = sim.k
    stats = {d: DesignStats() for d in range(1, k + 1)}

    def step(d: DesignId) -> None:
        stats[d] = update_stats(stats[d], sim.run(d, rng))

    by_time = cfg.policy is not Policy.OCBA
    if by_time:
        if cfg.total_budget < k * cfg.warmup:
            raise ValueError("total_budget smaller than the warm-up phase")
        targets = np.full(k, float(cfg.warmup))
        for d in range(1, k + 1):
            while stats[d].consumed_time < targets[d - 1] - _TIME_TOL:
                step(d)
    else:
        for d in range(1, k + 1):
            for _ in range(cfg.warmup):
                step(d)
    # sample variances need two replications per design
    for d in range(1, k + 1):
        while stats[d].completed < 2:
            step(d)

    history = []
    iterations = 0
    while True:
        consumed = sum(st.consumed_time for st in stats.values())
        if by_time:
            if targets.sum() >= cfg.total_budget - _TIME_TOL:
                break
            stage = min(targets.sum() + cfg.increment, cfg.total_budget)
            if cfg.policy is Policy.EA:
                weights = np.ones(k)
            else:
                weights = theorem2_weights(_allocation_inputs(stats, k, unit_time=False))
            targets = constrained_targets(weights, targets, stage)
            for d in range(1, k + 1):
                while stats[d].consumed_time < targets[d - 1] - _TIME_TOL:
                    step(d)
        else:
            if consumed >= cfg.total_budget:
                break
            counts = np.array([stats[d].completed for d in range(1, k + 1)])
            total = int(counts.sum()) + cfg.increment
            weights = theorem2_weights(_allocation_inputs(stats, k, unit_time=True))
            shares = constrained_targets(weights, counts.astype(np.float64), total)
            pinned = shares <= counts
            targets = counts.copy()
            free_total = total - int(counts[pinned].sum())
            targets[~pinned] = round_preserving_total(shares[~pinned], free_total)
            for d in range(1, k + 1):
                while stats[d].completed < targets[d - 1]:
                    step(d)
        iterations += 1
        if record_targets:
            history.append(np.array(targets, dtype=np.float64))

    for d in range(1, k + 1):
        if stats[d].completed < 2:
            raise InsufficientObservations(f"insufficient observations for design {d}")
    return SelectionReport(
        selected=select_observed_best(stats),
        stats=stats,
        consumed_time=sum(st.consumed_time for st in stats.values()),
        iterations=iterations,
        targets=history,
    )
