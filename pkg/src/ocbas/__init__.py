"""Computing budget allocation when simulation replications take random time."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .allocation import (
    AllocationInputs,
    AllocationVector,
    Policy,
    PolicyConfig,
    allocate_equal,
    allocate_ocba_classic,
    allocate_theorem2,
    apcs,
    run_sequential,
)
from .core import DesignStats, Observation, ProblemSpec, select_observed_best, update_stats
from .renewal import (
    DiscretePmf,
    PosteriorSpec,
    convolution_power,
    convolve,
    count_distribution,
    expected_replications,
    gaussian_approx_cdf,
    posterior_cdf,
    prob_replications_at_least,
    prob_replications_exact,
)

__all__ = [
    "BACKEND",
    "AllocationInputs",
    "AllocationVector",
    "DesignStats",
    "DiscretePmf",
    "Observation",
    "Policy",
    "PolicyConfig",
    "PosteriorSpec",
    "ProblemSpec",
    "allocate_equal",
    "allocate_ocba_classic",
    "allocate_theorem2",
    "apcs",
    "convolution_power",
    "convolve",
    "count_distribution",
    "expected_replications",
    "gaussian_approx_cdf",
    "posterior_cdf",
    "prob_replications_at_least",
    "prob_replications_exact",
    "run_sequential",
    "select_observed_best",
    "update_stats",
]
