"""Single-slot weighted reservoir sampler.

Feeds a stream one element at a time, keeps exactly one element, and after
any prefix holds element e with probability weight(e) / total weight fed.
The chain sampler composes these as black boxes; anything implementing
`UnitSamplerLike` can be substituted.
"""

from __future__ import annotations

from typing import Callable, Optional, Protocol, Tuple

from .core import RandomnessSource, WeightedElement, WeightMode


def replacement_ratio(weight, total_after) -> Tuple:
    """The single transition rule shared by the samplers and the oracle.

    An arriving element of weight w replaces the held element with
    probability w / T, where T is the running weight total *after* adding w.
    Returned as a (numerator, denominator) pair: production samplers realise
    it with one uniform draw, the enumeration oracle turns it into an exact
    fraction.  Changing the rule here changes both, which is the point.
    """
    return weight, total_after


class UnitSamplerLike(Protocol):
    def feed(self, element: WeightedElement) -> bool: ...

    @property
    def current(self) -> Optional[WeightedElement]: ...

    @property
    def weight_total(self): ...


class UnitSampler:
    """One-element reservoir with a running weight total.

    feed() reports whether the reservoir content changed; the chain sampler
    routes displaced elements based on that signal.  Each element must be fed
    at most once per instance (not checked here; the ingestion layer owns
    stream-wide uniqueness).
    """

    __slots__ = ("_exact", "_source", "_held", "_total")

    def __init__(self, mode: WeightMode, source: RandomnessSource):
        self._exact = mode is WeightMode.EXACT_INTEGER
        self._source = source
        self._held: Optional[WeightedElement] = None
        self._total = 0 if self._exact else 0.0

    def feed(self, element: WeightedElement) -> bool:
        num, den = replacement_ratio(element.weight, self._total + element.weight)
        self._total = den
        if self._exact:
            changed = self._source.next_below(den) < num
        else:
            changed = self._source.next_unit() < num / den
        if changed:
            self._held = element
        return changed

    @property
    def current(self) -> Optional[WeightedElement]:
        """The held element; None before the first feed."""
        return self._held

    @property
    def weight_total(self):
        """Sum of the weights of every element fed so far."""
        return self._total


UnitFactory = Callable[[RandomnessSource], UnitSamplerLike]
