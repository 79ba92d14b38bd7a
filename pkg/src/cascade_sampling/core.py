"""Shared domain types for the samplers.

Everything a sampler touches comes through here: validated stream elements,
the two weight-arithmetic modes, and the deterministic randomness source that
every sampler draws from.  Keeping randomness behind one small interface is
what lets tests swap the real generator for a scripted one and walk every
accept/reject branch of a sampler by hand.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from typing import Iterable, Optional


class SamplingError(Exception):
    """Base class for every error this package raises deliberately."""


class NonPositiveWeight(SamplingError):
    pass


class NonIntegerWeight(SamplingError):
    pass


class DuplicateId(SamplingError):
    pass


class InvalidK(SamplingError):
    pass


class TooFewElements(SamplingError):
    pass


class BudgetExceeded(SamplingError):
    pass


class InvalidConfig(SamplingError):
    pass


class WeightMode(enum.Enum):
    """How weights are represented and how accept/reject decisions are made.

    EXACT_INTEGER: weights are positive integers, running totals are unbounded
    integers, and every decision is a uniform integer draw below the running
    total compared against the arriving weight.  No rounding anywhere.

    FLOAT64: weights are positive floats and decisions compare a uniform
    variate in [0, 1) against weight/total, with ordinary double rounding.
    """

    EXACT_INTEGER = "int"
    FLOAT64 = "float"


@dataclass(frozen=True, slots=True)
class WeightedElement:
    """One stream item: an opaque identity plus a strictly positive weight."""

    id: object
    weight: int | float


def validate_element(raw_id, weight, mode: WeightMode, seen: Optional[set] = None) -> WeightedElement:
    """Check one raw (id, weight) record and return a WeightedElement.

    Raises NonPositiveWeight, NonIntegerWeight or DuplicateId.  When `seen`
    is given, the id is checked against it and recorded in it, so a caller
    holding one set per stream gets first-occurrence-wins duplicate detection.
    """
    if isinstance(weight, bool):
        raise NonIntegerWeight(f"weight for {raw_id!r} must be a number, got bool")
    if mode is WeightMode.EXACT_INTEGER:
        if not isinstance(weight, int):
            raise NonIntegerWeight(
                f"integer mode requires integer weights, got {weight!r} for {raw_id!r}"
            )
        if weight <= 0:
            raise NonPositiveWeight(f"weight must be > 0, got {weight!r} for {raw_id!r}")
    else:
        w = float(weight)
        if not math.isfinite(w) or w <= 0.0:
            raise NonPositiveWeight(
                f"weight must be a finite positive number, got {weight!r} for {raw_id!r}"
            )
        weight = w
    if seen is not None:
        if raw_id in seen:
            raise DuplicateId(f"id {raw_id!r} already seen in this stream")
        seen.add(raw_id)
    return WeightedElement(raw_id, weight)


class StreamValidator:
    """Per-stream ingestion gate: weight checks plus id uniqueness.

    Samplers themselves only remember the elements they hold, so full-stream
    duplicate detection has to happen here, before elements are fed.
    """

    def __init__(self, mode: WeightMode):
        self.mode = mode
        self._seen: set = set()
        self.elements_seen = 0
        self.weight_total = 0 if mode is WeightMode.EXACT_INTEGER else 0.0

    def validate(self, raw_id, weight) -> WeightedElement:
        element = validate_element(raw_id, weight, self.mode, seen=self._seen)
        self.elements_seen += 1
        self.weight_total += element.weight
        return element


# --- randomness -------------------------------------------------------------

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    z = (x + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, *indices: int) -> int:
    """Mix indices into a master seed, one splitmix64 round per index.

    This is the fixed splitting rule used everywhere a run needs several
    independent deterministic streams (one per chain level, one per trial):
    same master and indices always give the same derived seed.
    """
    h = master & _MASK64
    for idx in indices:
        h = _splitmix64(h ^ ((idx + 1) * _GOLDEN & _MASK64))
    return h


class RandomnessSource:
    """Deterministic uniform draws: integers below a bound, or unit floats.

    Identical seed means an identical draw sequence, so any sampler run is
    replayable byte for byte.  Integer draws are exact for unbounded bounds
    (rejection sampling under the hood), which is what the integer weight
    mode relies on.
    """

    __slots__ = ("seed", "_rng")

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self._rng = random.Random(self.seed)

    def next_below(self, bound: int) -> int:
        """Uniform integer in [0, bound)."""
        return self._rng.randrange(bound)

    def next_unit(self) -> float:
        """Uniform float in [0, 1)."""
        return self._rng.random()

    def spawn(self, index: int) -> "RandomnessSource":
        """Independent source derived from this one's seed and an index."""
        return RandomnessSource(derive_seed(self.seed, index))


_JUST_BELOW_ONE = math.nextafter(1.0, 0.0)


class ScriptedSource:
    """Forces a planned sequence of replacement decisions.

    Each planned True makes the next comparison accept (draw of 0), each
    False makes it reject (largest draw below the bound).  A False is only
    honoured when rejection is actually possible, i.e. the bound exceeds the
    arriving weight; callers enumerating branches must skip impossible ones.
    Exists so tests and the oracle can drive the production samplers through
    every branch of their decision tree.
    """

    def __init__(self, decisions: Iterable[bool]):
        self._plan = list(decisions)
        self._cursor = 0

    def _next_decision(self) -> bool:
        if self._cursor >= len(self._plan):
            raise RuntimeError("scripted source ran out of planned decisions")
        d = self._plan[self._cursor]
        self._cursor += 1
        return d

    def next_below(self, bound: int) -> int:
        return 0 if self._next_decision() else bound - 1

    def next_unit(self) -> float:
        return 0.0 if self._next_decision() else _JUST_BELOW_ONE

    @property
    def exhausted(self) -> bool:
        return self._cursor == len(self._plan)
