"""Streaming weighted sampling without replacement, and the tools to prove it.

The main sampler chains k single-slot weighted reservoirs: what one level
evicts, the next level receives, so each level samples the stream minus the
elements held above it.  All decisions are plain comparisons; in the
exact-integer weight mode no floating-point arithmetic touches the sampled
law at all.  Baseline samplers, an exact rational-arithmetic enumeration
oracle, and a Monte-Carlo harness round out the package.
"""

from .baselines import (
    ExponentMethodSampler,
    OversampleResult,
    WithReplacementSampler,
    oversample,
    truncate_mantissa,
)
from .cascade import CascadeSampler
from .core import (
    BudgetExceeded,
    DuplicateId,
    InvalidConfig,
    InvalidK,
    NonIntegerWeight,
    NonPositiveWeight,
    RandomnessSource,
    SamplingError,
    ScriptedSource,
    StreamValidator,
    TooFewElements,
    WeightedElement,
    WeightMode,
    derive_seed,
    validate_element,
)
from .oracle import (
    ExactDistribution,
    analytic_swor,
    distributions_equal,
    enumerate_cascade,
    enumerate_coupled,
    enumerate_unit,
    first_marginal,
    inclusion_probabilities,
)
from .stats import (
    NoiseFloor,
    PrecisionReport,
    StatReport,
    gof_test,
    precision_experiment,
    run_trials,
    tv_distance,
    tv_noise_floor,
)
from .unit import UnitSampler, UnitSamplerLike, replacement_ratio

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded",
    "CascadeSampler",
    "DuplicateId",
    "ExactDistribution",
    "ExponentMethodSampler",
    "InvalidConfig",
    "InvalidK",
    "NoiseFloor",
    "NonIntegerWeight",
    "NonPositiveWeight",
    "OversampleResult",
    "PrecisionReport",
    "RandomnessSource",
    "SamplingError",
    "ScriptedSource",
    "StatReport",
    "StreamValidator",
    "TooFewElements",
    "UnitSampler",
    "UnitSamplerLike",
    "WeightMode",
    "WeightedElement",
    "WithReplacementSampler",
    "analytic_swor",
    "derive_seed",
    "distributions_equal",
    "enumerate_cascade",
    "enumerate_coupled",
    "enumerate_unit",
    "first_marginal",
    "gof_test",
    "inclusion_probabilities",
    "oversample",
    "precision_experiment",
    "replacement_ratio",
    "run_trials",
    "truncate_mantissa",
    "tv_distance",
    "tv_noise_floor",
    "validate_element",
]
