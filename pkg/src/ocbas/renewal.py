"""Distribution of the number of replications finished within a time budget.

A design whose replications take i.i.d. integer durations ``t_1, t_2, ...``
completes ``n`` replications in budget ``T`` where
``t_1 + ... + t_n <= T < t_1 + ... + t_{n+1}``. Everything here is exact
for discrete durations with finite support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtr

from . import _backend

_MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscretePmf:
    """PMF on the integers ``support_min, support_min + 1, ...``."""

    support_min: int
    probs: np.ndarray

    def __post_init__(self):
        probs = np.ascontiguousarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a non-empty 1-D array")
        if np.any(probs < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        if self.support_min < 0:
            raise ValueError("support_min must be >= 0")
        object.__setattr__(self, "probs", probs)

    def __eq__(self, other):
        if not isinstance(other, DiscretePmf):
            return NotImplemented
        return self.support_min == other.support_min and np.array_equal(self.probs, other.probs)

    __hash__ = None

    @classmethod
    def point_mass(cls, value: int) -> DiscretePmf:
        return cls(int(value), np.ones(1))

    @classmethod
    def uniform(cls, lo: int, hi: int) -> DiscretePmf:
        if hi < lo:
            raise ValueError("empty support")
        return cls(int(lo), np.full(hi - lo + 1, 1.0 / (hi - lo + 1)))

    @classmethod
    def from_weights(cls, support_min: int, weights) -> DiscretePmf:
        w = np.asarray(weights, dtype=np.float64)
        return cls(support_min, w / w.sum())

    @property
    def support_max(self) -> int:
        return self.support_min + self.probs.size - 1

    @property
    def values(self) -> np.ndarray:
        return np.arange(self.support_min, self.support_max + 1)

    @property
    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    @property
    def variance(self) -> float:
        return float(np.dot((self.values - self.mean) ** 2, self.probs))

    def pmf(self, t: int) -> float:
        i = t - self.support_min
        return float(self.probs[i]) if 0 <= i < self.probs.size else 0.0

    def cdf(self, t: float) -> float:
        i = math.floor(t) - self.support_min
        if i < 0:
            return 0.0
        if i >= self.probs.size - 1:
            return 1.0
        return float(self.probs[: i + 1].sum())

    def as_dict(self) -> dict[int, float]:
        return {int(v): float(p) for v, p in zip(self.values, self.probs)}


def convolve(a: DiscretePmf, b: DiscretePmf) -> DiscretePmf:
    """PMF of the sum of independent draws from ``a`` and ``b``."""
    probs = np.convolve(a.probs, b.probs)
    total = probs.sum()
    if abs(total - 1.0) > _MASS_TOL:
        probs = probs / total
    return DiscretePmf(a.support_min + b.support_min, probs)


class ConvolutionPowers:
    """Incrementally built cache of ``f``, ``f*f``, ``f*f*f``, ...

    Not shared between threads; each caller owns its instance.
    """

    def __init__(self, f: DiscretePmf):
        self.f = f
        self._powers = [DiscretePmf.point_mass(0)]

    def __getitem__(self, c: int) -> DiscretePmf:
        if c < 0:
            raise ValueError("power must be >= 0")
        while len(self._powers) <= c:
            self._powers.append(convolve(self._powers[-1], self.f))
        return self._powers[c]


def convolution_power(f: DiscretePmf, c: int, cache: ConvolutionPowers | None = None) -> DiscretePmf:
    """``c``-fold self-convolution of ``f``; ``c = 0`` is the point mass at 0."""
    if cache is None:
        cache = ConvolutionPowers(f)
    elif cache.f is not f:
        raise ValueError("cache was built for a different PMF")
    return cache[c]


def prob_replications_at_least(f: DiscretePmf, budget: int, c: int,
                               cache: ConvolutionPowers | None = None) -> float:
    """``Pr{n >= c}`` evaluated as ``(F * f^(c-1))(budget)``."""
    if budget < 0 or c < 0:
        raise ValueError("budget and c must be nonnegative")
    if c == 0:
        return 1.0
    if c * f.support_min > budget:
        return 0.0
    g = convolution_power(f, c - 1, cache)
    # (F * g)(T) = sum_s g(s) F(T - s)
    return float(sum(p * f.cdf(budget - s) for s, p in zip(g.values, g.probs)))


def prob_replications_exact(f: DiscretePmf, budget: int, c: int,
                            cache: ConvolutionPowers | None = None) -> float:
    """``Pr{n = c}`` evaluated as ``[F * (f^(c-1) - f^c)](budget)``."""
    if budget < 0 or c < 0:
        raise ValueError("budget and c must be nonnegative")
    if c == 0:
        return 1.0 - f.cdf(budget)
    if cache is None:
        cache = ConvolutionPowers(f)
    hi = prob_replications_at_least(f, budget, c, cache)
    lo = prob_replications_at_least(f, budget, c + 1, cache)
    return max(hi - lo, 0.0)


def count_distribution(f: DiscretePmf, budget: int) -> np.ndarray:
    """Vector of ``Pr{n = c}`` for ``c = 0, 1, ...`` (trailing zeros dropped)."""
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    if f.support_min < 1:
        raise ValueError("durations must be >= 1")
    _, exact = _backend.renewal_counts(f.probs, f.support_min, int(budget))
    return exact


def expected_replications(f: DiscretePmf, budget: int) -> float:
    p = count_distribution(f, budget)
    return float(np.dot(np.arange(p.size), p))


@dataclass(frozen=True)
class PosteriorSpec:
    mean: float
    sigma: float
    time_pmf: DiscretePmf
    budget: int
    prior_cdf: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")


def posterior_cdf(spec: PosteriorSpec, x):
    """CDF of the posterior performance given a time budget.

    A mixture over the replication count ``c`` of normals with standard
    deviation ``sigma / sqrt(c)``; the ``c = 0`` term falls back to the prior.
    Accepts a scalar or an array of evaluation points.
    """
    p = count_distribution(spec.time_pmf, spec.budget)
    xa = np.asarray(x, dtype=np.float64)
    p0 = p[0]
    if p0 > _MASS_TOL and spec.prior_cdf is None:
        raise ValueError("prior required: Pr{n=0} > 0 for this budget")
    c = np.arange(1, p.size)
    z = (xa[..., None] - spec.mean) * np.sqrt(c) / spec.sigma
    out = ndtr(z) @ p[1:]
    if spec.prior_cdf is not None and p0 > 0:
        out = out + p0 * np.asarray(spec.prior_cdf(xa), dtype=np.float64)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def gaussian_approx_cdf(mean: float, sigma: float, mu_time: float, budget: float, x):
    """Large-budget normal approximation with variance ``sigma^2 mu / T``."""
    if budget <= 0 or sigma <= 0 or mu_time <= 0:
        raise ValueError("budget, sigma and mu_time must be positive")
    scale = math.sqrt(sigma * sigma * mu_time / budget)
    out = ndtr((np.asarray(x, dtype=np.float64) - mean) / scale)
    return float(out) if out.ndim == 0 else out
