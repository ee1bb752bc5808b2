"""Nested facility chains from per-budget offline solutions and a bid set.

Cost mode keeps ``|F_k| <= k`` and pays a constant factor in cost; size mode
keeps ``cost(F_k) <= opt_k`` and pays a constant factor in size.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Union

import numpy as np

from .bidding import BidSet, Universe, competitive_ratio, doubling_bids, randomized_bids
from .core import (
    FacilitySet,
    InstanceError,
    MedianInstance,
    Number,
    approx_le,
    gamma_indices,
    metric_report,
    safe_ratio,
)
from .solvers import OfflineSolution

Bidder = Union[str, BidSet, Callable[[Universe], BidSet]]


class ChainInvariantError(RuntimeError):
    """A construction step broke a guarantee it is supposed to keep."""


@dataclass(frozen=True)
class FacilityChain:
    """``sets[k-1]`` is ``F_k``.

    ``index_set`` is the budget set K of a cost-mode chain; ``paid`` holds the
    paid bids ``B_k`` of a size-mode chain.
    """

    sets: tuple
    mode: str
    bids: Optional[BidSet] = None
    index_set: tuple = ()
    paid: tuple = ()

    @property
    def n(self) -> int:
        return len(self.sets)

    def __getitem__(self, k: int) -> FacilitySet:
        return self.sets[k - 1]

    def to_lists(self, instance: MedianInstance) -> list:
        return [instance.sort_ids(s) for s in self.sets]


def _make_bids(bidder: Bidder, universe: Universe, seed: Optional[int]) -> BidSet:
    if isinstance(bidder, BidSet):
        return bidder
    if bidder == "det":
        return doubling_bids(universe)
    if bidder == "rand":
        return randomized_bids(universe, seed)
    if callable(bidder):
        return bidder(universe)
    raise ValueError(f"unknown bidder {bidder!r}")


def bid_index_set(costs, bids: Optional[BidSet]) -> tuple:
    """Budgets K whose offline costs are exactly the bids, plus 1 and every zero-cost budget.

    A bid equal to several offline costs maps to the smallest such budget.
    That keeps the bids paid against ``T = cost(F*_k)`` a superset of
    ``{cost(F*_l) : l in K, l >= k-}``.
    """
    K = {1}
    K.update(k for k, c in enumerate(costs, start=1) if c == 0)
    first = {}
    for k, c in enumerate(costs, start=1):
        first.setdefault(c, k)
    for b in bids or ():
        if b not in first:
            raise InstanceError(f"bid {b!r} is not an offline cost")
        K.add(first[b])
    return tuple(sorted(K))


def _check_monotone(offline: OfflineSolution):
    for k in range(1, offline.n):
        if not approx_le(offline.cost(k + 1), offline.cost(k)):
            raise InstanceError("offline costs must be non-increasing in k")


def build_cost_competitive(
    instance: MedianInstance,
    offline: OfflineSolution,
    bidder: Bidder = "det",
    seed: Optional[int] = None,
    check_metric: bool = True,
) -> FacilityChain:
    """Nested chain with ``|F_k| <= k``.

    The distinct positive offline costs form the bidding universe. The bid
    set picks budgets K; the largest one keeps its offline set and each
    smaller one keeps only the members of the next chain set nearest to its
    own offline set (:func:`oblimed.core.gamma`). Budgets outside K reuse the
    set of the largest budget in K below them.

    With ``check_metric`` the instance must be metric, and each backward
    step is checked against ``cost(F_k) <= 2 cost(F*_k) + cost(F_next)``.
    """
    if check_metric and not metric_report(instance).is_metric:
        raise InstanceError("cost-competitive reduction needs a metric instance")
    _check_monotone(offline)
    n = offline.n
    costs = offline.costs
    positive = sorted({c for c in costs if c > 0})
    bids = _make_bids(bidder, Universe.finite(positive), seed) if positive else None
    K = bid_index_set(costs, bids)

    chain = {K[-1]: instance.indices(offline.facility_set(K[-1]))}
    for k, nxt in zip(reversed(K[:-1]), reversed(K[1:])):
        star = instance.indices(offline.facility_set(k))
        chain[k] = gamma_indices(instance, star, chain[nxt])
        if check_metric:
            lhs = instance.kernel_cost(chain[k])
            rhs = 2 * instance.kernel_cost(star) + instance.kernel_cost(chain[nxt])
            if not approx_le(instance.cost_value(lhs), instance.cost_value(rhs)):
                raise ChainInvariantError(f"nearest-subset step at k={k} exceeds 2 cost(F*_k) + cost(F_next)")

    sets, j = [], 0
    for k in range(1, n + 1):
        while j + 1 < len(K) and K[j + 1] <= k:
            j += 1
        sets.append(instance.ids(chain[K[j]]))
    return FacilityChain(tuple(sets), "cost", bids, K)


def build_size_competitive(instance: MedianInstance, offline: OfflineSolution, bids: BidSet) -> FacilityChain:
    """``F_k`` is the union of ``F*_b`` over the bids ``b`` paid against ``T = k`` on ``[n]``."""
    n = offline.n
    for b in bids:
        if not (isinstance(b, (int, np.integer)) and 1 <= b <= n):
            raise InstanceError(f"bid {b!r} outside [1, {n}]")
    sets, paid = [], []
    for k in range(1, n + 1):
        Bk = bids.paid(k)
        union = frozenset().union(*(offline.facility_set(int(b)) for b in Bk))
        sets.append(union)
        paid.append(tuple(int(b) for b in Bk))
    for s in sets:
        instance.indices(s)
    return FacilityChain(tuple(sets), "size", bids, (), tuple(paid))


@dataclass(frozen=True)
class ChainReport:
    rows: tuple  # (k, size, cost, opt, cost_ratio, size_ratio)
    nesting_ok: bool

    @property
    def max_cost_ratio(self) -> Number:
        return max(r[4] for r in self.rows)

    @property
    def max_size_ratio(self) -> Number:
        return max(r[5] for r in self.rows)

    def sizes_within_budget(self) -> bool:
        return all(r[1] <= r[0] for r in self.rows)

    def costs_within_opt(self) -> bool:
        return all(approx_le(r[2], r[3]) for r in self.rows)


def is_nested(sets: Iterable[FacilitySet]) -> bool:
    sets = list(sets)
    return all(a <= b for a, b in zip(sets, sets[1:]))


def verify_chain(instance: MedianInstance, chain, oracle: OfflineSolution) -> ChainReport:
    """Per-budget sizes, costs and ratios against an exact oracle."""
    sets = chain.sets if isinstance(chain, FacilityChain) else tuple(chain)
    rows = []
    for k, s in enumerate(sets, start=1):
        c = instance.cost_value(instance.kernel_cost(instance.indices(s)))
        opt = oracle.cost(k)
        size_ratio = safe_ratio(len(s), k)
        rows.append((k, len(s), c, opt, safe_ratio(c, opt), size_ratio))
    return ChainReport(tuple(rows), is_nested(sets))


def bid_ratio_on_costs(chain: FacilityChain, offline: OfflineSolution) -> Number:
    """Competitive ratio of the chain's bid set on its own cost universe."""
    positive = sorted({c for c in offline.costs if c > 0})
    if not positive or chain.bids is None:
        return 1
    return competitive_ratio(chain.bids, Universe.finite(positive))


@dataclass(frozen=True)
class RandomizedChainStats:
    per_k_mean: np.ndarray
    mean_max: float
    seeds: int


def randomized_cost_ratios(
    instance: MedianInstance,
    offline: OfflineSolution,
    oracle: OfflineSolution,
    seeds: Iterable[int],
) -> RandomizedChainStats:
    """Mean cost ratio per budget over seeded randomized-bidder chains.

    Chains depend on the seed only through the realized bid set, so reports
    are cached per bid tuple.
    """
    cache = {}
    per_k, maxes = [], []
    positive = sorted({c for c in offline.costs if c > 0})
    universe = Universe.finite(positive) if positive else None
    for seed in seeds:
        bids = randomized_bids(universe, seed) if universe is not None else None
        key = bids.bids if bids is not None else None
        if key not in cache:
            chain = build_cost_competitive(instance, offline, bids if bids is not None else "det", check_metric=False)
            rep = verify_chain(instance, chain, oracle)
            cache[key] = np.array([float(r[4]) for r in rep.rows])
        r = cache[key]
        per_k.append(r)
        maxes.append(r.max())
    per_k = np.array(per_k)
    return RandomizedChainStats(per_k.mean(axis=0), float(np.mean(maxes)), len(maxes))
