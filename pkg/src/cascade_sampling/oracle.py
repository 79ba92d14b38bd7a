"""Exact enumeration of the samplers' decision trees in rational arithmetic.

Instead of instrumenting the production code, the samplers' update rules are
re-executed here symbolically: every accept/reject decision becomes a branch
weighted by an exact `fractions.Fraction`, and the leaves aggregate into the
exact output distribution.  The replacement probability itself is imported
from the production transition rule (`unit.replacement_ratio`), so both sides
share one description of the update; the deliberate structural duplication of
the surrounding loop is what makes this an independent check rather than a
mirror of a shared bug.

All enumeration requires integer weights -- exactness is the whole point.
"""

from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from itertools import permutations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .core import (
    BudgetExceeded,
    DuplicateId,
    InvalidConfig,
    InvalidK,
    NonIntegerWeight,
    NonPositiveWeight,
    TooFewElements,
    WeightedElement,
)
from .unit import replacement_ratio

DEFAULT_BRANCH_BUDGET = 500_000

ZERO = Fraction(0)
ONE = Fraction(1)


def _as_pairs(stream: Iterable) -> List[Tuple[object, int]]:
    """Normalise a stream of WeightedElement or (id, weight) pairs."""
    pairs = []
    seen = set()
    for item in stream:
        if isinstance(item, WeightedElement):
            eid, w = item.id, item.weight
        else:
            eid, w = item
        if not isinstance(w, int) or isinstance(w, bool):
            raise NonIntegerWeight(f"exact enumeration requires integer weights, got {w!r}")
        if w <= 0:
            raise NonPositiveWeight(f"weight must be > 0, got {w!r} for {eid!r}")
        if eid in seen:
            raise DuplicateId(f"id {eid!r} appears twice")
        seen.add(eid)
        pairs.append((eid, w))
    return pairs


class ExactDistribution:
    """Map from ordered id tuples to exact probabilities, total mass exactly 1."""

    def __init__(self, masses: Dict[tuple, Fraction], check: bool = True):
        self._masses = {key: m for key, m in masses.items() if m != 0}
        if check:
            total = sum(self._masses.values(), ZERO)
            if total != 1:
                raise AssertionError(f"mass leak: total is {total}, not 1")
            if any(m < 0 for m in self._masses.values()):
                raise AssertionError("negative mass")

    def mass(self, key: tuple) -> Fraction:
        return self._masses.get(tuple(key), ZERO)

    def items(self):
        return self._masses.items()

    def support(self):
        return set(self._masses)

    def total_mass(self) -> Fraction:
        return sum(self._masses.values(), ZERO)

    def prefix_marginal(self, length: int) -> "ExactDistribution":
        """Distribution of the first `length` coordinates."""
        out = defaultdict(lambda: ZERO)
        for key, m in self._masses.items():
            out[key[:length]] += m
        return ExactDistribution(dict(out))

    def __len__(self):
        return len(self._masses)

    def __repr__(self):
        return f"ExactDistribution({len(self._masses)} outcomes)"


def distributions_equal(
    d1: ExactDistribution, d2: ExactDistribution
) -> Tuple[bool, Optional[Tuple[tuple, Fraction, Fraction]]]:
    """Exact equality over the union of supports.

    Returns (True, None) when equal, otherwise (False, (key, mass1, mass2))
    for the first differing outcome in a deterministic order.
    """
    keys = d1.support() | d2.support()
    for key in sorted(keys, key=repr):
        m1, m2 = d1.mass(key), d2.mass(key)
        if m1 != m2:
            return False, (key, m1, m2)
    return True, None


class _Budget:
    __slots__ = ("remaining",)

    def __init__(self, limit: int):
        self.remaining = limit

    def spend(self, amount: int = 1):
        self.remaining -= amount
        if self.remaining < 0:
            raise BudgetExceeded("enumeration branch budget exhausted")


def enumerate_unit(stream, branch_budget: int = DEFAULT_BRANCH_BUDGET) -> ExactDistribution:
    """Exact law of the single-slot reservoir after feeding the whole stream."""
    pairs = _as_pairs(stream)
    budget = _Budget(branch_budget)
    states: Dict[object, Fraction] = {None: ONE}
    total = 0
    for eid, w in pairs:
        total += w
        num, den = replacement_ratio(w, total)
        p_accept = Fraction(num, den)
        p_reject = ONE - p_accept
        nxt: Dict[object, Fraction] = defaultdict(lambda: ZERO)
        for held, prob in states.items():
            budget.spend()
            nxt[eid] += prob * p_accept
            if p_reject:
                nxt[held] += prob * p_reject
        states = dict(nxt)
    if not pairs:
        return ExactDistribution({(): ONE})
    return ExactDistribution({(held,): p for held, p in states.items()})


def enumerate_cascade(
    stream,
    k: int,
    branch_budget: int = DEFAULT_BRANCH_BUDGET,
    denominator_bias: int = 0,
) -> ExactDistribution:
    """Exact law of the chain sampler's ordered output after the whole stream.

    The output tuples have length min(n, k).  `denominator_bias` is a test
    hook that corrupts the replacement probability of occupied levels to
    w / (total + bias); it exists so verification tooling can prove it would
    notice a broken sampler.  Every intermediate state is audited against the
    distinctness and weight-ledger invariants.
    """
    if k < 1:
        raise InvalidK(f"k must be >= 1, got {k}")
    pairs = _as_pairs(stream)
    budget = _Budget(branch_budget)
    wmap = dict(pairs)

    # state key: (held ids tuple, per-level weight totals tuple), equal length
    states: Dict[Tuple[tuple, tuple], Fraction] = {((), ()): ONE}
    arrived = 0
    for j, (eid, w) in enumerate(pairs, start=1):
        arrived += w
        visit = min(j, k)
        nxt: Dict[Tuple[tuple, tuple], Fraction] = defaultdict(lambda: ZERO)
        for (held, totals), prob in states.items():
            # stack entries: (level index, held, totals, carried element id, prob)
            stack = [(0, list(held), list(totals), eid, prob)]
            while stack:
                i, held_l, totals_l, new, p = stack.pop()
                if new is None or i == visit:
                    key = (tuple(held_l), tuple(totals_l))
                    _audit_state(key[0], key[1], arrived, wmap)
                    nxt[key] += p
                    continue
                budget.spend()
                w_new = wmap[new]
                if i == len(held_l):
                    # empty level: replacement probability is w/w = 1
                    stack.append((i + 1, held_l + [new], totals_l + [w_new], None, p))
                    continue
                num, den = replacement_ratio(w_new, totals_l[i] + w_new)
                den += denominator_bias
                p_acc = Fraction(num, den)
                kept = totals_l[:i] + [totals_l[i] + w_new] + totals_l[i + 1 :]
                # accept: the arriving element displaces the held one downward
                stack.append(
                    (i + 1, held_l[:i] + [new] + held_l[i + 1 :], kept, held_l[i], p * p_acc)
                )
                if p_acc != 1:
                    stack.append((i + 1, held_l, kept, new, p * (ONE - p_acc)))
        states = dict(nxt)

    out: Dict[tuple, Fraction] = defaultdict(lambda: ZERO)
    for (held, _totals), prob in states.items():
        out[held] += prob
    return ExactDistribution(dict(out))


def _audit_state(held: tuple, totals: tuple, arrived: int, wmap: dict):
    if len(set(held)) != len(held):
        raise AssertionError(f"held elements not distinct: {held}")
    expected = arrived
    for eid, total in zip(held, totals):
        if total != expected:
            raise AssertionError(
                f"weight ledger violated at {held}: level total {total} != {expected}"
            )
        expected -= wmap[eid]


def analytic_swor(weights, k: int) -> ExactDistribution:
    """Closed-form law of an ordered weighted k-sample without replacement.

    P(a1, ..., ak) is the telescoping product of each element's weight over
    the total weight of everything not yet chosen.
    """
    if k < 1:
        raise InvalidK(f"k must be >= 1, got {k}")
    pairs = _as_pairs(weights)
    if len(pairs) < k:
        raise TooFewElements(f"need at least {k} elements, got {len(pairs)}")
    grand_total = sum(w for _, w in pairs)
    masses: Dict[tuple, Fraction] = {}
    for tup in permutations(pairs, k):
        prob = ONE
        remaining = grand_total
        for _, w in tup:
            prob *= Fraction(w, remaining)
            remaining -= w
        masses[tuple(eid for eid, _ in tup)] = prob
    return ExactDistribution(masses)


def enumerate_coupled(
    weights,
    k: int,
    aux_id,
    branch_budget: int = DEFAULT_BRANCH_BUDGET,
) -> ExactDistribution:
    """Alternate construction of the without-replacement law, via splicing.

    Takes an ordered k-sample without replacement of the set minus one
    designated element, then splices that element in: it claims position 1
    with probability weight/total, and each later position goes to the single
    element so far displaced (with probability proportional to its weight
    among the not-yet-placed) or to the next element of the base sample.
    The displaced pool provably stays a singleton, which is asserted at every
    step.  Cross-checks the direct enumeration through entirely different
    bookkeeping.
    """
    if k < 1:
        raise InvalidK(f"k must be >= 1, got {k}")
    pairs = _as_pairs(weights)
    wmap = dict(pairs)
    if aux_id not in wmap:
        raise InvalidConfig(f"aux id {aux_id!r} not in the weighted set")
    base_pairs = [(eid, w) for eid, w in pairs if eid != aux_id]
    if len(base_pairs) < k:
        raise TooFewElements(
            f"splice construction needs at least {k} elements besides {aux_id!r}"
        )
    budget = _Budget(branch_budget)
    total = sum(wmap.values())
    base = analytic_swor(base_pairs, k)

    acc: Dict[tuple, Fraction] = defaultdict(lambda: ZERO)
    for x_tuple, px in base.items():
        p_first = Fraction(wmap[aux_id], total)
        # (position filled so far, chosen tuple, the single displaced id, prob)
        stack = [
            (1, (aux_id,), x_tuple[0], px * p_first),
            (1, (x_tuple[0],), aux_id, px * (ONE - p_first)),
        ]
        while stack:
            i, chosen, displaced, p = stack.pop()
            if p == 0:
                continue
            budget.spend()
            pool = (set(x_tuple[:i]) | {aux_id}) - set(chosen)
            if pool != {displaced}:
                raise AssertionError(f"displaced pool is {pool}, expected {{{displaced!r}}}")
            if i == k:
                acc[chosen] += p
                continue
            remaining_weight = total - sum(wmap[c] for c in chosen)
            p_displaced = Fraction(wmap[displaced], remaining_weight)
            x_next = x_tuple[i]
            stack.append((i + 1, chosen + (displaced,), x_next, p * p_displaced))
            stack.append((i + 1, chosen + (x_next,), displaced, p * (ONE - p_displaced)))
    return ExactDistribution(dict(acc))


def first_marginal(weights) -> Dict[object, Fraction]:
    """Exact law of the first coordinate: weight over total weight."""
    pairs = _as_pairs(weights)
    total = sum(w for _, w in pairs)
    return {eid: Fraction(w, total) for eid, w in pairs}


def inclusion_probabilities(weights, k: int) -> Dict[object, Fraction]:
    """Exact probability of each element appearing anywhere in the k-sample.

    Dynamic programming over chosen-prefix subsets; exponential in n, so
    capped at n <= 20 (plenty for the statistical harness, which only needs
    this when full ordered tuples are too many to test cell-wise).
    """
    if k < 1:
        raise InvalidK(f"k must be >= 1, got {k}")
    pairs = _as_pairs(weights)
    n = len(pairs)
    if n < k:
        raise TooFewElements(f"need at least {k} elements, got {n}")
    if n > 20:
        raise InvalidConfig(f"inclusion DP is capped at 20 elements, got {n}")
    grand_total = sum(w for _, w in pairs)

    included: Dict[object, Fraction] = {eid: ZERO for eid, _ in pairs}
    # prefix_mass[mask] = P(first popcount(mask) picks are exactly this set)
    prefix_mass = {0: ONE}
    for _depth in range(k):
        nxt: Dict[int, Fraction] = defaultdict(lambda: ZERO)
        for mask, pf in prefix_mass.items():
            chosen_weight = sum(w for idx, (_, w) in enumerate(pairs) if mask >> idx & 1)
            remaining = grand_total - chosen_weight
            for idx, (eid, w) in enumerate(pairs):
                if mask >> idx & 1:
                    continue
                p = pf * Fraction(w, remaining)
                included[eid] += p
                nxt[mask | (1 << idx)] += p
        prefix_mass = dict(nxt)
    return included
