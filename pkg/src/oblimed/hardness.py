"""Lower-bound gadgets.

* :func:`build_adversarial` builds the nested-cluster metric space on which
  any size-competitive chain yields an equally competitive bid set on [m].
* :func:`build_kl` builds the star on which no nested pair of k- and
  l-medians beats ratio ``2 - 1/l``; :func:`kl_algorithm` is the matching
  better-of-two-options algorithm.

All gadgets are exact: distances are shortest paths over rational edge
lengths and the cost gaps go down to ``(m!)**-m``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Optional

import networkx as nx
import numpy as np

from . import _kernels
from .bidding import BidSet, Universe, competitive_ratio
from .core import InstanceError, MedianInstance, Number, cost, metric_report, safe_ratio
from .oblivious import FacilityChain
from .solvers import exact_kmedian_indices

ADV_BUILD_GUARD = 6
ADV_VERIFY_GUARD = 5


def _shortest_path_instance(edges, customers, facilities) -> MedianInstance:
    G = nx.Graph()
    G.add_nodes_from(customers)
    G.add_nodes_from(facilities)
    for a, b, w in edges:
        G.add_edge(a, b, weight=w)
    cols = []
    for f in facilities:
        d = nx.single_source_dijkstra_path_length(G, f, weight="weight")
        cols.append([d[u] for u in customers])
    dist = [[cols[j][i] for j in range(len(facilities))] for i in range(len(customers))]
    return MedianInstance(customers, facilities, dist, None, "rational")


# ---------------------------------------------------------------------------
# nested-cluster gadget
# ---------------------------------------------------------------------------


def _cluster_id(level: int, i: int) -> str:
    return f"mu{level}_{i}"


def _customer_id(u) -> str:
    return "u" + "".join(str(x) for x in u)


@dataclass(frozen=True)
class AdversarialInstance:
    m: int
    instance: MedianInstance
    clusters: tuple  # clusters[l-1] = ids of M_l, |M_l| = l
    delta: tuple  # delta[l-1] = 1 + (m!)**-l

    def cluster(self, level: int) -> frozenset:
        return frozenset(self.clusters[level - 1])

    def cluster_cost(self, level: int) -> Fraction:
        return cost(self.instance, self.clusters[level - 1])

    def level_delta(self, level: int) -> Fraction:
        # the distance bound for a customer served outside every cluster at
        # or above level 1 is 2 (two unit-plus hops)
        return Fraction(2) if level == 0 else self.delta[level - 1]


def build_adversarial(m: int, numeric_mode: str = "rational") -> AdversarialInstance:
    """Customers are vectors ``u`` with ``u_l in [l]``; facilities are ``mu(l, i)``.

    Each customer ``u`` is joined to ``mu(l, u_l)`` by an edge of length
    ``1 + (m!)**-l``; all other distances are shortest paths.
    """
    if numeric_mode != "rational":
        raise InstanceError("adversarial gadget needs exact arithmetic; float64 cannot resolve its cost gaps")
    if not 2 <= m <= ADV_BUILD_GUARD:
        raise InstanceError(f"m must be in [2, {ADV_BUILD_GUARD}]")
    fact = math.factorial(m)
    delta = tuple(1 + Fraction(1, fact**level) for level in range(1, m + 1))
    vectors = list(itertools.product(*[range(1, level + 1) for level in range(1, m + 1)]))
    customers = [_customer_id(u) for u in vectors]
    clusters = tuple(tuple(_cluster_id(level, i) for i in range(1, level + 1)) for level in range(1, m + 1))
    facilities = [f for c in clusters for f in c]
    edges = [
        (_customer_id(u), _cluster_id(level, u[level - 1]), delta[level - 1])
        for u in vectors
        for level in range(1, m + 1)
    ]
    inst = _shortest_path_instance(edges, customers, facilities)
    adv = AdversarialInstance(m, inst, clusters, delta)

    costs = [adv.cluster_cost(level) for level in range(1, m + 1)]
    for level, c in enumerate(costs, start=1):
        if c != fact * delta[level - 1]:
            raise InstanceError(f"cost(M_{level}) = {c}, expected m! * delta_{level}")
    if any(a <= b for a, b in zip(costs, costs[1:])):
        raise InstanceError("cluster costs are not strictly decreasing")
    if not metric_report(inst).is_metric:
        raise InstanceError("gadget distances are not metric")
    return adv


def _cluster_masks(adv: AdversarialInstance) -> list:
    inst = adv.instance
    return [sum(1 << inst.index_of(f) for f in c) for c in adv.clusters]


def _popcounts(n_bits: int) -> np.ndarray:
    masks = np.arange(1 << n_bits, dtype=np.int64)
    pc = np.zeros_like(masks)
    for j in range(n_bits):
        pc += (masks >> j) & 1
    return pc


def verify_property_ii(adv: AdversarialInstance, max_subset_size: Optional[int] = None) -> bool:
    """Exhaustive check over facility subsets.

    For every subset F (up to ``max_subset_size`` facilities) and every k:
    ``cost(F) <= cost(M_k)`` implies F contains some ``M_l`` with ``l >= k``.
    Also checks that ``M_k`` is the unique cheapest set of at most k facilities.
    """
    inst = adv.instance
    F = inst.n_facilities
    if adv.m > ADV_VERIFY_GUARD:
        raise InstanceError(f"exhaustive verification limited to m <= {ADV_VERIFY_GUARD}")
    costs = _kernels.all_subset_costs(inst._kd, inst._kw)
    masks = np.arange(1 << F, dtype=np.int64)
    pc = _popcounts(F)
    live = masks > 0
    if max_subset_size is not None:
        live &= pc <= max_subset_size
    cmasks = _cluster_masks(adv)
    contains = [(masks & cm) == cm for cm in cmasks]
    contains_at_or_above = [None] * adv.m
    acc = np.zeros(masks.size, dtype=bool)
    for level in range(adv.m, 0, -1):
        acc = acc | contains[level - 1]
        contains_at_or_above[level - 1] = acc
    for level in range(1, adv.m + 1):
        cm = cmasks[level - 1]
        ck = costs[cm]
        cheap = live & (costs <= ck)
        if (cheap & ~contains_at_or_above[level - 1]).any():
            return False
        rivals = live & (pc <= level) & (masks != cm) & (costs <= ck)
        if rivals.any():
            return False
    return True


def witness_customer(adv: AdversarialInstance, F, j: int) -> Hashable:
    """Customer that is far from ``F`` when F contains no ``M_l`` with ``l >= j``.

    Coordinates below j are 1; at level ``l >= j`` it points at the first
    member of ``M_l`` missing from F.
    """
    F = frozenset(F)
    u = []
    for level in range(1, adv.m + 1):
        if level < j:
            u.append(1)
            continue
        missing = [i for i, f in enumerate(adv.clusters[level - 1], start=1) if f not in F]
        if not missing:
            raise InstanceError(f"F contains M_{level} with {level} >= {j}")
        u.append(missing[0])
    return _customer_id(u)


def check_witness_bound(adv: AdversarialInstance, F, j: int) -> bool:
    """The witness customer is at least ``delta_{j-1}`` from F and
    ``cost(F) > m! - 1 + delta_{j-1} = m! delta_j``."""
    inst = adv.instance
    x = witness_customer(adv, F, j)
    row = inst.customers.index(x)
    d = min(inst.dist[row][inst.index_of(f)] for f in F)
    fact = math.factorial(adv.m)
    bound = fact - 1 + adv.level_delta(j - 1)
    return d >= adv.level_delta(j - 1) and cost(inst, F) > bound and bound == fact * adv.delta[j - 1]


def extract_bid_set(adv: AdversarialInstance, chain) -> BidSet:
    """Bids ``{k in [m] : M_k is a subset of F_k}`` read off a size-competitive chain."""
    sets = chain.sets if isinstance(chain, FacilityChain) else tuple(chain)
    if len(sets) < adv.m:
        raise InstanceError(f"chain must cover k = 1..{adv.m}")
    inst = adv.instance
    for k in range(1, adv.m + 1):
        if not sets[k - 1] or cost(inst, sets[k - 1]) > adv.cluster_cost(k):
            raise InstanceError(f"chain exceeds opt at k={k}; extraction presumes cost(F_k) <= opt_k")
    bids = tuple(k for k in range(1, adv.m + 1) if adv.cluster(k) <= frozenset(sets[k - 1]))
    return BidSet(bids)


def chain_size_ratio(chain, upto: int) -> Fraction:
    sets = chain.sets if isinstance(chain, FacilityChain) else tuple(chain)
    return max(Fraction(len(sets[k - 1]), k) for k in range(1, upto + 1))


def extracted_bid_ratio(adv: AdversarialInstance, chain) -> Fraction:
    return competitive_ratio(extract_bid_set(adv, chain), Universe.integers(adv.m))


# ---------------------------------------------------------------------------
# kl star
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KlInstance:
    l: int
    instance: MedianInstance
    hub: str
    leaves: tuple
    delta: Fraction

    def identities(self) -> dict:
        inst, G = self.instance, self.leaves
        g1 = G[0]
        swapped = [g for g in G if g != g1] + [self.hub]
        out = {
            "cost_f": cost(inst, [self.hub]),
            "cost_G": cost(inst, G),
            "cost_g_i": cost(inst, [g1]),
            "cost_G_minus_g_i_plus_f": cost(inst, swapped),
        }
        out["ratio_single"] = out["cost_g_i"] / out["cost_f"]
        out["ratio_swap"] = out["cost_G_minus_g_i_plus_f"] / out["cost_G"]
        return out


def build_kl(l: int) -> KlInstance:
    """Star with l customers: customer j is ``1/l`` from leaf ``g_j`` and 1 from the hub ``f``."""
    if l < 2:
        raise InstanceError("l must be >= 2")
    delta = Fraction(1, l)
    customers = [f"c{j}" for j in range(1, l + 1)]
    leaves = tuple(f"g{j}" for j in range(1, l + 1))
    hub = "f"
    edges = [(c, g, delta) for c, g in zip(customers, leaves)] + [(c, hub, Fraction(1)) for c in customers]
    kl = KlInstance(l, _shortest_path_instance(edges, customers, [hub, *leaves]), hub, leaves, delta)
    ids = kl.identities()
    expected = {
        "cost_f": Fraction(l),
        "cost_G": l * delta,
        "cost_g_i": delta + (l - 1) * (2 + delta),
        "cost_G_minus_g_i_plus_f": (l - 1) * delta + 1,
    }
    for key, val in expected.items():
        if ids[key] != val:
            raise InstanceError(f"{key} = {ids[key]}, expected {val}")
    return kl


@dataclass(frozen=True)
class KlOption:
    small: tuple  # indices of F_k
    large: tuple  # indices of F_l
    ratio: Number


def _best_removal(instance, base, pool, r):
    """Remove r members of ``pool`` from ``base`` minimizing cost; lexicographic ties."""
    best = None
    for X in itertools.combinations(pool, r):
        keep = sorted(set(base) - set(X))
        c = instance.kernel_cost(keep)
        if best is None or c < best[0]:
            best = (c, tuple(keep))
    return best[1]


def kl_options(instance: MedianInstance, k: int, l: int) -> tuple[KlOption, KlOption]:
    """Both candidate nested pairs ``(F_k, F_l)``.

    (a) keep the optimal k-median ``F`` and complete it with the optimal
    l-median ``G`` minus the cheapest-to-lose members of ``G - F``;
    (b) keep ``G`` and use its best k-subset below it.
    """
    if not 1 <= k < l <= instance.n_facilities:
        raise InstanceError(f"need 1 <= k < l <= {instance.n_facilities}")
    F_idx, opt_k = exact_kmedian_indices(instance, k)
    G_idx, opt_l = exact_kmedian_indices(instance, l)
    F_set, G_set = set(F_idx.tolist()), set(G_idx.tolist())
    opt_k, opt_l = instance.cost_value(opt_k), instance.cost_value(opt_l)

    def value(idx):
        return instance.cost_value(instance.kernel_cost(list(idx)))

    pool = sorted(G_set - F_set)
    r = len(F_set | G_set) - l
    large_a = _best_removal(instance, sorted(F_set | G_set), pool, r)
    small_a = tuple(sorted(F_set))
    ratio_a = max(safe_ratio(value(small_a), opt_k), safe_ratio(value(large_a), opt_l))

    G_sorted = sorted(G_set)
    small_b = _best_removal(instance, G_sorted, G_sorted, l - k)
    large_b = tuple(G_sorted)
    ratio_b = max(safe_ratio(value(small_b), opt_k), safe_ratio(value(large_b), opt_l))
    return KlOption(small_a, large_a, ratio_a), KlOption(small_b, large_b, ratio_b)


def kl_algorithm(instance: MedianInstance, k: int, l: int) -> tuple[frozenset, frozenset, Number]:
    """Better of the two options in :func:`kl_options` (option (a) on ties)."""
    a, b = kl_options(instance, k, l)
    best = a if a.ratio <= b.ratio else b
    return instance.ids(best.small), instance.ids(best.large), best.ratio
