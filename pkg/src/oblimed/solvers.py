"""Offline k-median solvers producing one facility set per budget k."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import _kernels
from .core import FacilitySet, InstanceError, MedianInstance, Number, approx_le

ENUMERATION_GUARD = 25
SOLVER_TAGS = ("exact", "local_search", "greedy_size")


def _check_k(instance: MedianInstance, k: int):
    if not 1 <= k <= instance.n_facilities:
        raise InstanceError(f"k={k} outside [1, {instance.n_facilities}]")


def exact_kmedian_indices(instance: MedianInstance, k: int):
    _check_k(instance, k)
    if instance.n_facilities > ENUMERATION_GUARD:
        raise InstanceError("instance too large for exact solver")
    idx, c = _kernels.best_subset(instance._kd, instance._kw, k)
    return np.asarray(idx, dtype=np.int64), c


def exact_kmedian(instance: MedianInstance, k: int) -> tuple[FacilitySet, Number]:
    """Minimum-cost facility set of size k by enumeration.

    Only size-k subsets are scanned since cost never increases when facilities
    are added. Ties go to the lexicographically smallest index tuple.
    """
    idx, c = exact_kmedian_indices(instance, k)
    return instance.ids(idx), instance.cost_value(c)


def _greedy_fill(instance: MedianInstance, chosen: list, target_size: int):
    """Add the facility with the largest cost decrease until ``target_size`` are open.

    Ties go to the smallest index. Returns the chosen list and its kernel cost.
    """
    kd, kw = instance._kd, instance._kw
    F = instance.n_facilities
    current = kd[:, chosen].min(axis=1) if chosen else None
    cur_cost = kw @ current if chosen else None
    while True:
        if len(chosen) >= target_size:
            break
        rest = [j for j in range(F) if j not in chosen]
        if not rest:
            break
        cand = kd[:, rest] if current is None else np.minimum(kd[:, rest], current[:, None])
        costs = kw @ cand
        j = int(np.argmin(costs))
        chosen = chosen + [rest[j]]
        current, cur_cost = cand[:, j], costs[j]
    return chosen, cur_cost


def local_search_kmedian(instance: MedianInstance, k: int, epsilon: float = 0.1) -> tuple[FacilitySet, Number]:
    """Single-swap local search.

    Starts from greedy additions up to size k and applies the best single
    swap while it improves the cost by a factor of at least ``1 + epsilon/k``.
    """
    _check_k(instance, k)
    if not epsilon > 0:
        raise InstanceError("epsilon must be positive")
    kd, kw = instance._kd, instance._kw
    F = instance.n_facilities
    chosen, cur = _greedy_fill(instance, [], target_size=k)
    chosen = sorted(chosen)
    factor = Fraction(epsilon).limit_denominator(10**9) / k + 1 if instance.exact else 1 + epsilon / k
    while len(chosen) < F:
        outside = [j for j in range(F) if j not in chosen]
        best = None
        for pos, out in enumerate(chosen):
            keep = chosen[:pos] + chosen[pos + 1 :]
            base = kd[:, keep].min(axis=1) if keep else None
            cand = kd[:, outside] if base is None else np.minimum(kd[:, outside], base[:, None])
            costs = kw @ cand
            j = int(np.argmin(costs))
            if best is None or costs[j] < best[0]:
                best = (costs[j], out, outside[j])
        new_cost, out, inn = best
        # improvement test: cur >= factor * new, kept exact in rational mode
        if instance.exact:
            improves = Fraction(int(cur)) >= factor * int(new_cost) and new_cost < cur
        else:
            improves = cur >= factor * new_cost and new_cost < cur
        if not improves:
            break
        chosen = sorted([j for j in chosen if j != out] + [inn])
        cur = new_cost
    return instance.ids(chosen), instance.cost_value(cur)


def greedy_size_approx(instance: MedianInstance, k: int, opt_k: Number) -> FacilitySet:
    """Greedy additions until the cost drops to ``opt_k``; the result may exceed k facilities."""
    _check_k(instance, k)
    everything = instance.cost_value(instance.kernel_cost(np.arange(instance.n_facilities)))
    if not approx_le(everything, opt_k):
        raise InstanceError("target unreachable")
    chosen, _ = _greedy_fill_value(instance, opt_k)
    return instance.ids(chosen)


def _greedy_fill_value(instance, opt_k):
    # the stop test is done on user-facing values so float tolerance applies
    kd, kw = instance._kd, instance._kw
    F = instance.n_facilities
    chosen, current = [], None
    while True:
        if current is not None and approx_le(instance.cost_value(kw @ current), opt_k):
            return chosen, instance.cost_value(kw @ current)
        rest = [j for j in range(F) if j not in chosen]
        cand = kd[:, rest] if current is None else np.minimum(kd[:, rest], current[:, None])
        j = int(np.argmin(kw @ cand))
        chosen.append(rest[j])
        current = cand[:, j]


@dataclass(frozen=True)
class OfflineSolution:
    """Facility sets and costs for k = 1..n (index ``k-1``)."""

    solver: str
    sets: tuple
    costs: tuple
    epsilon: Optional[float] = None

    @property
    def n(self) -> int:
        return len(self.sets)

    def facility_set(self, k: int) -> FacilitySet:
        return self.sets[k - 1]

    def cost(self, k: int) -> Number:
        return self.costs[k - 1]

    @property
    def tag(self) -> str:
        if self.solver == "local_search":
            return f"local_search({self.epsilon})"
        return self.solver

    def to_dict(self, instance: MedianInstance = None) -> dict:
        def enc(c):
            return f"{c.numerator}/{c.denominator}" if isinstance(c, Fraction) else float(c)

        def order(s):
            return instance.sort_ids(s) if instance is not None else sorted(s, key=str)

        return {
            "solver": self.tag,
            "per_k": [
                {"k": k, "facilities": order(s), "cost": enc(c)}
                for k, (s, c) in enumerate(zip(self.sets, self.costs), start=1)
            ],
        }


def monotone_repair(sets: list, costs: list) -> tuple[list, list]:
    """Make costs non-increasing in k by carrying cheaper smaller-budget sets forward."""
    sets, costs = list(sets), list(costs)
    for i in range(1, len(costs)):
        if costs[i - 1] < costs[i]:
            sets[i], costs[i] = sets[i - 1], costs[i - 1]
    return sets, costs


def solve_sequence(instance: MedianInstance, solver: str = "exact", epsilon: float = 0.1) -> OfflineSolution:
    """Run one solver for every k in [n] and repair the cost sequence."""
    if solver not in SOLVER_TAGS:
        raise InstanceError(f"unknown solver {solver!r}")
    n = instance.n_facilities
    sets, costs = [], []
    if solver == "exact":
        for k in range(1, n + 1):
            s, c = exact_kmedian(instance, k)
            sets.append(s)
            costs.append(c)
    elif solver == "local_search":
        for k in range(1, n + 1):
            s, c = local_search_kmedian(instance, k, epsilon)
            sets.append(s)
            costs.append(c)
    else:
        for k in range(1, n + 1):
            _, opt = exact_kmedian(instance, k)
            s = greedy_size_approx(instance, k, opt)
            sets.append(s)
            costs.append(instance.cost_value(instance.kernel_cost(instance.indices(s))))
    sets, costs = monotone_repair(sets, costs)
    return OfflineSolution(solver, tuple(sets), tuple(costs), epsilon if solver == "local_search" else None)
