"""The comparison samplers: with-replacement, over-sampling, exponent method.

These exist to be measured against the chain sampler.  The with-replacement
sampler is k independent unit reservoirs.  Over-sampling repeatedly draws
independent unit samples from a materialised set until k distinct ids appear;
its draw count blows up under skewed weights, which is the cost it is here to
demonstrate.  The exponent method keeps the k largest random keys u**(1/w)
and is sensitive to how precisely those keys are computed, so the key
precision is a parameter.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import List, Optional, Sequence

from .core import (
    DuplicateId,
    InvalidK,
    RandomnessSource,
    TooFewElements,
    WeightedElement,
    WeightMode,
    derive_seed,
)
from .unit import UnitSampler


class WithReplacementSampler:
    """k independent single-slot reservoirs, each fed the whole stream.

    The k held elements are independent unit samples, so repetitions are
    possible; the output is always length k once anything has been fed.
    """

    def __init__(self, k: int, mode: WeightMode = WeightMode.EXACT_INTEGER, seed: int = 0):
        if k < 1:
            raise InvalidK(f"k must be >= 1, got {k}")
        self._slots = [
            UnitSampler(mode, RandomnessSource(derive_seed(seed, i))) for i in range(k)
        ]
        self.k = k
        self.elements_seen = 0

    def feed(self, element: WeightedElement) -> None:
        if self.elements_seen:
            eid = element.id
            for slot in self._slots:
                if slot.current.id == eid:
                    raise DuplicateId(f"id {eid!r} is already held by the sampler")
        for slot in self._slots:
            slot.feed(element)
        self.elements_seen += 1

    def sample(self) -> List[WeightedElement]:
        if not self.elements_seen:
            return []
        return [slot.current for slot in self._slots]


@dataclass
class OversampleResult:
    sample: List[WeightedElement]  # first k distinct draws, first-appearance order
    draws: int
    complete: bool  # False when the draw budget ran out first


def oversample(
    elements: Sequence[WeightedElement],
    k: int,
    source: RandomnessSource,
    mode: WeightMode = WeightMode.EXACT_INTEGER,
    max_draws: Optional[int] = None,
) -> OversampleResult:
    """Draw independent unit samples from the whole set until k ids are distinct.

    Not a stream operator: the set must be materialised up front.  The number
    of draws is unbounded in expectation when one weight dominates, so an
    optional draw budget caps it; a capped run returns complete=False with
    whatever was collected.
    """
    if k < 1:
        raise InvalidK(f"k must be >= 1, got {k}")
    if len(elements) < k:
        raise TooFewElements(f"need at least {k} elements, got {len(elements)}")

    cumulative = []
    total = 0
    for e in elements:
        total += e.weight
        cumulative.append(total)

    exact = mode is WeightMode.EXACT_INTEGER
    chosen: List[WeightedElement] = []
    seen_ids = set()
    draws = 0
    while len(chosen) < k:
        if max_draws is not None and draws >= max_draws:
            return OversampleResult(chosen, draws, complete=False)
        point = source.next_below(total) if exact else source.next_unit() * total
        idx = bisect_right(cumulative, point)
        draws += 1
        e = elements[idx]
        if e.id not in seen_ids:
            seen_ids.add(e.id)
            chosen.append(e)
    return OversampleResult(chosen, draws, complete=True)


def truncate_mantissa(x: float, bits: int) -> float:
    """Keep only the top `bits` significand bits of x (truncation toward zero)."""
    if x == 0.0 or math.isinf(x) or math.isnan(x):
        return x
    m, e = math.frexp(x)  # x = m * 2**e with 0.5 <= |m| < 1
    scale = 1 << bits
    return math.ldexp(math.floor(m * scale) / scale, e)


class ExponentMethodSampler:
    """Keeps the k elements with the largest random keys u**(1/weight).

    At full precision (mantissa_bits=None) keys are kept in the log domain,
    log(u)/weight, so huge weights cannot underflow the comparison; ordering
    is unchanged since log is monotone.  With mantissa_bits set, the key
    itself is computed and its significand truncated to that many bits --
    the one controlled site where precision is lost.  Key ties (possible only
    on the truncated grid) rank the newer element higher; at full precision
    ties have probability ~2**-53 and the choice is immaterial.
    """

    def __init__(self, k: int, seed: int = 0, mantissa_bits: Optional[int] = None):
        if k < 1:
            raise InvalidK(f"k must be >= 1, got {k}")
        if mantissa_bits is not None and mantissa_bits < 1:
            raise InvalidK(f"mantissa_bits must be >= 1, got {mantissa_bits}")
        self.k = k
        self.mantissa_bits = mantissa_bits
        self._source = RandomnessSource(derive_seed(seed, 0))
        self._entries: List[tuple] = []  # (key, seq, element), sorted descending
        self._seq = 0

    def _key(self, weight) -> float:
        u = self._source.next_unit()
        log_key = math.log(u) / weight if u > 0.0 else -math.inf
        if self.mantissa_bits is None:
            return log_key
        return truncate_mantissa(math.exp(log_key), self.mantissa_bits)

    def feed(self, element: WeightedElement) -> None:
        entry = (self._key(element.weight), self._seq, element)
        self._seq += 1
        entries = self._entries
        if len(entries) < self.k:
            entries.append(entry)
        elif entry[:2] > entries[-1][:2]:
            entries[-1] = entry
        else:
            return
        entries.sort(key=lambda t: t[:2], reverse=True)

    def sample(self) -> List[WeightedElement]:
        """Held elements ordered by descending key."""
        return [element for _, _, element in self._entries]
