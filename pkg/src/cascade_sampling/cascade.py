"""Streaming weighted sampling without replacement via a chain of unit samplers.

The sampler keeps k single-slot reservoirs in a fixed order.  Every arriving
element is offered to level 1; whenever a level's reservoir swaps, the
displaced element is offered to the next level, and whatever falls off the
last level is discarded.  Level i therefore ends up having been fed exactly
the arrived elements minus those currently held by levels 1..i-1, so its slot
is a unit weighted sample of that residual set -- which makes the held tuple
(level 1, ..., level k) an ordered weighted sample without replacement.

The unit samplers are used strictly as black boxes (only feed / changed /
current), so the chain adds no arithmetic of its own beyond the weight
bookkeeping a caller may ask it to audit via `ledger_check`.
"""

from __future__ import annotations

import sys
from typing import List, Optional

from .core import (
    DuplicateId,
    InvalidK,
    RandomnessSource,
    WeightedElement,
    WeightMode,
    derive_seed,
)
from .unit import UnitFactory, UnitSampler

# random.Random keeps its Mersenne Twister state in C where sys.getsizeof
# cannot see it; charged explicitly so reported sizes scale honestly with k.
RNG_INTERNAL_BYTES = 2560


class CascadeSampler:
    """Maintains an ordered weighted k-sample without replacement, one pass."""

    def __init__(
        self,
        k: int,
        mode: WeightMode = WeightMode.EXACT_INTEGER,
        seed: int = 0,
        unit_factory: Optional[UnitFactory] = None,
    ):
        if k < 1:
            raise InvalidK(f"k must be >= 1, got {k}")
        if unit_factory is None:
            unit_factory = lambda source: UnitSampler(mode, source)
        # one independent source per level, seeds derived by the fixed rule
        self._levels = [
            unit_factory(RandomnessSource(derive_seed(seed, i))) for i in range(k)
        ]
        self.k = k
        self.mode = mode
        self.seed = seed
        self.elements_seen = 0

    def _occupied(self) -> int:
        return min(self.elements_seen, self.k)

    def feed(self, element: WeightedElement) -> None:
        """Offer one arriving element to the chain.

        Raises DuplicateId when the arriving id collides with a currently
        held element (which would break distinctness of the sample).  Ids
        must be unique stream-wide; only collisions with held elements are
        detectable here, the rest is the ingestion layer's job.
        """
        levels = self._levels
        occupied = self._occupied()
        eid = element.id
        for i in range(occupied):
            if levels[i].current.id == eid:
                raise DuplicateId(f"id {eid!r} is already held by the sampler")

        new = element
        j = self.elements_seen + 1
        for i in range(min(j, self.k)):
            level = levels[i]
            previous = level.current  # None only when this level is still empty
            if level.feed(new):
                new = previous
        # `new` now carries whatever fell off the last visited level (or None
        # when the arrival settled into a previously empty level); there is no
        # level below, so it is discarded.
        self.elements_seen = j

    def sample(self) -> List[WeightedElement]:
        """Current ordered sample: one element per occupied level."""
        return [self._levels[i].current for i in range(self._occupied())]

    def ledger_check(self, arrived_weight_total) -> bool:
        """Audit the per-level weight totals against the arrived total.

        Level i must have been fed exactly the arrived elements minus those
        held above it, so its weight total must equal the arrived total minus
        the held weights of levels 1..i-1; empty levels must still be at zero.
        Exact comparison in integer mode; float mode allows accumulation
        rounding.  Returns False on any violation.
        """
        exact = self.mode is WeightMode.EXACT_INTEGER
        expected = arrived_weight_total
        occupied = self._occupied()
        for i, level in enumerate(self._levels):
            total = level.weight_total
            if i < occupied:
                if exact:
                    if total != expected:
                        return False
                elif abs(total - expected) > 1e-9 * max(1.0, abs(expected)):
                    return False
                expected -= level.current.weight
            elif total != 0:
                return False
        return True

    def state_size_bytes(self) -> int:
        """Best-effort byte count of everything the sampler holds.

        Covers the level list, each unit sampler, its randomness source
        (including the generator state hidden in C), the running total, and
        the held element.  Used by the benchmark to check that memory grows
        proportionally with k.
        """
        size = sys.getsizeof(self) + sys.getsizeof(self._levels)
        for level in self._levels:
            size += sys.getsizeof(level) + RNG_INTERNAL_BYTES
            total = level.weight_total
            size += sys.getsizeof(total)
            held = level.current
            if held is not None:
                size += sys.getsizeof(held) + sys.getsizeof(held.id) + sys.getsizeof(held.weight)
        return size
