"""Monte-Carlo goodness-of-fit harness and the key-precision experiment.

The enumeration oracle can verify tiny instances exactly; this module covers
the scales beyond it.  Repeated sampler runs (one derived seed per trial, so
reports are reproducible and order-independent) are compared against the
analytic without-replacement law with a chi-square test, and total-variation
distances are judged against a simulated noise floor rather than raw zero --
an empirical distribution is never exactly the true one at finite trials.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import chi2, norm

from .baselines import ExponentMethodSampler, WithReplacementSampler, oversample
from .cascade import CascadeSampler
from .core import InvalidConfig, RandomnessSource, WeightedElement, WeightMode, derive_seed
from .oracle import _as_pairs, analytic_swor, first_marginal, inclusion_probabilities

SAMPLER_KINDS = ("cascade", "wr", "exponent", "oversample")

MIN_TRIALS = 1_000
MIN_EXPECTED_PER_CELL = 5.0
ORDERED_METHOD_MAX_K = 3

_OTHER = "__other__"


@dataclass
class StatReport:
    """Outcome of one goodness-of-fit run."""

    sampler: str
    stream: List[Tuple[object, int]]
    k: int
    trials: int
    significance: float
    method: str  # "ordered-tuples" or "first-marginal+inclusion"
    chi_square: float
    df: int
    p_value: float
    tv_distance: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "sampler": self.sampler,
            "stream": [[str(eid), w] for eid, w in self.stream],
            "k": self.k,
            "trials": self.trials,
            "significance": self.significance,
            "method": self.method,
            "chi_square": self.chi_square,
            "df": self.df,
            "p_value": self.p_value,
            "tv_distance": self.tv_distance,
            "passed": self.passed,
            "details": self.details,
        }


def run_trials(
    kind: str,
    elements: Sequence[WeightedElement],
    k: int,
    trials: int,
    seed: int,
    mode: WeightMode = WeightMode.EXACT_INTEGER,
    mantissa_bits: Optional[int] = None,
) -> Counter:
    """Repeatedly run one sampler over the stream; count ordered outcomes."""
    if kind not in SAMPLER_KINDS:
        raise InvalidConfig(f"unknown sampler kind {kind!r}")
    counts: Counter = Counter()
    elements = tuple(elements)
    if kind == "cascade":
        for t in range(trials):
            sampler = CascadeSampler(k, mode, derive_seed(seed, t))
            for e in elements:
                sampler.feed(e)
            counts[tuple(e.id for e in sampler.sample())] += 1
    elif kind == "wr":
        for t in range(trials):
            sampler = WithReplacementSampler(k, mode, derive_seed(seed, t))
            for e in elements:
                sampler.feed(e)
            counts[tuple(e.id for e in sampler.sample())] += 1
    elif kind == "exponent":
        for t in range(trials):
            sampler = ExponentMethodSampler(k, derive_seed(seed, t), mantissa_bits)
            for e in elements:
                sampler.feed(e)
            counts[tuple(e.id for e in sampler.sample())] += 1
    else:  # oversample
        for t in range(trials):
            result = oversample(elements, k, RandomnessSource(derive_seed(seed, t)), mode)
            counts[tuple(e.id for e in result.sample)] += 1
    return counts


def tv_distance(observed: Counter, expected_probs: Dict[tuple, float], trials: int) -> float:
    """Total-variation distance between empirical frequencies and a law."""
    keys = set(observed) | set(expected_probs)
    return 0.5 * sum(
        abs(observed.get(key, 0) / trials - expected_probs.get(key, 0.0)) for key in keys
    )


@dataclass
class NoiseFloor:
    mean: float
    std: float
    q95: float
    sims: int


def tv_noise_floor(
    probs: Sequence[float], trials: int, sims: int = 200, seed: int = 0
) -> NoiseFloor:
    """Sampling distribution of the TV distance under the true law itself.

    Simulates `sims` multinomial draws of size `trials` from the law and
    measures each one's TV distance back to it.  The mean is the floor an
    exact sampler is expected to sit at; verdicts compare against multiples
    of it, never against zero.
    """
    rng = np.random.default_rng(seed)
    p = np.asarray(probs, dtype=float)
    p = p / p.sum()
    draws = rng.multinomial(trials, p, size=sims)
    tvs = 0.5 * np.abs(draws / trials - p).sum(axis=1)
    return NoiseFloor(float(tvs.mean()), float(tvs.std()), float(np.quantile(tvs, 0.95)), sims)


def _merge_small_cells(
    expected_probs: Dict[tuple, float], trials: int
) -> List[Tuple[object, float]]:
    """Merge cells whose expected count is below the chi-square minimum."""
    cells = sorted(expected_probs.items(), key=lambda kv: (kv[1], repr(kv[0])))
    other_keys: List[tuple] = []
    other_p = 0.0
    kept: List[Tuple[object, float]] = []
    for key, p in cells:
        if trials * p < MIN_EXPECTED_PER_CELL:
            other_keys.append(key)
            other_p += p
        else:
            kept.append((key, p))
    # the merged bucket itself must clear the minimum; eat smallest kept cells
    while other_keys and trials * other_p < MIN_EXPECTED_PER_CELL and kept:
        key, p = kept.pop(0)
        other_keys.append(key)
        other_p += p
    out: List[Tuple[object, float]] = list(kept)
    if other_keys:
        out.append(((_OTHER, frozenset(other_keys)), other_p))
    return out


def _chi_square_gof(
    observed: Counter, expected_probs: Dict[tuple, float], trials: int
) -> Tuple[float, int, float, int]:
    """Chi-square statistic, degrees of freedom, p-value, merged-cell count.

    Any observation outside the law's support is an immediate failure: the
    law assigns it zero mass, so chi-square is infinite and p is zero.
    """
    stray = [key for key in observed if key not in expected_probs]
    if stray:
        return float("inf"), max(len(expected_probs) - 1, 1), 0.0, 0
    cells = _merge_small_cells(expected_probs, trials)
    if len(cells) < 2:
        return 0.0, 0, 1.0, len(cells)
    stat = 0.0
    for key, p in cells:
        if isinstance(key, tuple) and len(key) == 2 and key[0] is _OTHER:
            obs = sum(observed.get(member, 0) for member in key[1])
        else:
            obs = observed.get(key, 0)
        exp = trials * p
        stat += (obs - exp) ** 2 / exp
    df = len(cells) - 1
    return stat, df, float(chi2.sf(stat, df)), len(cells)


def gof_test(
    sampler_kind: str,
    stream,
    k: int,
    trials: int,
    seed: int,
    significance: float = 0.001,
    mode: WeightMode = WeightMode.EXACT_INTEGER,
    mantissa_bits: Optional[int] = None,
) -> StatReport:
    """Goodness-of-fit of a sampler's empirical law vs the analytic one.

    Small k tests the full ordered-tuple cells; larger k falls back to the
    first-coordinate marginal plus per-element inclusion frequencies (full
    tuple cells grow factorially).  The verdict applies `significance` to the
    chi-square p-value, Bonferroni-corrected across the inclusion tests.
    """
    if trials < MIN_TRIALS:
        raise InvalidConfig(f"trials must be >= {MIN_TRIALS}, got {trials}")
    if not 0.0 < significance < 1.0:
        raise InvalidConfig(f"significance must be in (0, 1), got {significance}")
    pairs = _as_pairs(stream)
    if not pairs:
        raise InvalidConfig("stream must not be empty")
    elements = [WeightedElement(eid, w) for eid, w in pairs]
    k_eff = min(k, len(pairs))
    counts = run_trials(sampler_kind, elements, k, trials, seed, mode, mantissa_bits)

    law = analytic_swor(pairs, k_eff)
    law_probs = {key: float(m) for key, m in law.items()}
    tv = tv_distance(counts, law_probs, trials)

    if k_eff <= ORDERED_METHOD_MAX_K:
        stat, df, p_value, n_cells = _chi_square_gof(counts, law_probs, trials)
        passed = p_value >= significance
        return StatReport(
            sampler=sampler_kind,
            stream=pairs,
            k=k,
            trials=trials,
            significance=significance,
            method="ordered-tuples",
            chi_square=stat,
            df=df,
            p_value=p_value,
            tv_distance=tv,
            passed=passed,
            details={"cells": n_cells},
        )

    # large k: first-coordinate marginal plus inclusion probabilities
    first_probs = {(eid,): float(m) for eid, m in first_marginal(pairs).items()}
    first_counts = Counter()
    include_counts: Counter = Counter()
    for key, c in counts.items():
        first_counts[key[:1]] += c
        for eid in key:
            include_counts[eid] += c
    stat, df, p_value, n_cells = _chi_square_gof(first_counts, first_probs, trials)

    inclusion = inclusion_probabilities(pairs, k_eff)
    per_element_alpha = significance / len(pairs)
    worst_z = 0.0
    min_p = 1.0
    inclusion_ok = True
    for eid, frac in inclusion.items():
        p = float(frac)
        if p <= 0.0 or p >= 1.0:
            # inclusion certain or impossible: any deviation is a failure
            if include_counts.get(eid, 0) != (trials if p >= 1.0 else 0):
                inclusion_ok = False
            continue
        z = (include_counts.get(eid, 0) / trials - p) / np.sqrt(p * (1 - p) / trials)
        pe = 2.0 * float(norm.sf(abs(z)))
        worst_z = max(worst_z, abs(z))
        min_p = min(min_p, pe)
        if pe < per_element_alpha:
            inclusion_ok = False

    passed = (p_value >= significance) and inclusion_ok
    return StatReport(
        sampler=sampler_kind,
        stream=pairs,
        k=k,
        trials=trials,
        significance=significance,
        method="first-marginal+inclusion",
        chi_square=stat,
        df=df,
        p_value=p_value,
        tv_distance=tv,
        passed=passed,
        details={
            "cells": n_cells,
            "inclusion_max_abs_z": worst_z,
            "inclusion_min_p": min_p,
            "inclusion_alpha": per_element_alpha,
        },
    )


@dataclass
class PrecisionRow:
    mantissa_bits: int
    tv_distance: float
    exceeds_threshold: bool


@dataclass
class PrecisionReport:
    """Key-precision sweep: exact-integer chain sampler vs truncated-key method."""

    stream: List[Tuple[object, int]]
    k: int
    trials: int
    noise: NoiseFloor
    threshold: float  # 3x the noise-floor mean
    cascade_tv: float
    cascade_within_threshold: bool
    rows: List[PrecisionRow]

    def to_dict(self) -> dict:
        return {
            "stream": [[str(eid), w] for eid, w in self.stream],
            "k": self.k,
            "trials": self.trials,
            "noise_floor": {
                "mean": self.noise.mean,
                "std": self.noise.std,
                "q95": self.noise.q95,
                "sims": self.noise.sims,
            },
            "threshold": self.threshold,
            "cascade_tv": self.cascade_tv,
            "cascade_within_threshold": self.cascade_within_threshold,
            "exponent": [
                {
                    "mantissa_bits": row.mantissa_bits,
                    "tv_distance": row.tv_distance,
                    "exceeds_threshold": row.exceeds_threshold,
                }
                for row in self.rows
            ],
        }


def precision_experiment(
    stream,
    k: int,
    mantissa_bits_list: Sequence[int],
    trials: int,
    seed: int,
    noise_sims: int = 200,
) -> PrecisionReport:
    """Measure how key truncation distorts the sampled law.

    Runs the exact-integer chain sampler and the key-based sampler at each
    requested mantissa width over the same trial budget, reporting each
    empirical law's TV distance from the analytic one next to the simulated
    noise floor.  Bits >= 53 mean an untruncated double key.  Magnitudes for
    truncated keys are reported, not asserted against any fixed target; the
    distortion depends on the weight spread.
    """
    if trials < MIN_TRIALS:
        raise InvalidConfig(f"trials must be >= {MIN_TRIALS}, got {trials}")
    pairs = _as_pairs(stream)
    if not pairs:
        raise InvalidConfig("stream must not be empty")
    elements = [WeightedElement(eid, w) for eid, w in pairs]
    k_eff = min(k, len(pairs))

    law = analytic_swor(pairs, k_eff)
    law_probs = {key: float(m) for key, m in law.items()}
    noise = tv_noise_floor(
        list(law_probs.values()), trials, sims=noise_sims, seed=derive_seed(seed, 0xF100)
    )
    threshold = 3.0 * noise.mean

    cascade_counts = run_trials(
        "cascade", elements, k, trials, derive_seed(seed, 0xCA5C), WeightMode.EXACT_INTEGER
    )
    cascade_tv = tv_distance(cascade_counts, law_probs, trials)

    rows = []
    for bits in mantissa_bits_list:
        counts = run_trials(
            "exponent",
            elements,
            k,
            trials,
            derive_seed(seed, bits),
            mantissa_bits=None if bits >= 53 else bits,
        )
        tv = tv_distance(counts, law_probs, trials)
        rows.append(PrecisionRow(bits, tv, tv > threshold))

    return PrecisionReport(
        stream=pairs,
        k=k,
        trials=trials,
        noise=noise,
        threshold=threshold,
        cascade_tv=cascade_tv,
        cascade_within_threshold=cascade_tv < threshold,
        rows=rows,
    )
