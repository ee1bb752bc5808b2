import math

import numpy as np
import pytest

from oblimed.bidding import BidSet, Universe, doubling_bids
from oblimed.core import InstanceError, MedianInstance, cost
from oblimed.generate import generate_random_metric
from oblimed.hardness import build_adversarial
from oblimed.oblivious import (
    FacilityChain,
    bid_index_set,
    bid_ratio_on_costs,
    build_cost_competitive,
    build_size_competitive,
    randomized_cost_ratios,
    verify_chain,
)
from oblimed.solvers import solve_sequence

from conftest import random_suite


def _with_duplicate_columns(inst, reps):
    # repeated facilities make several budgets share an offline cost
    D = np.repeat(inst.dist, reps, axis=1)
    facs = [f"{f}#{r}" for f in inst.facilities for r in range(reps)]
    return MedianInstance(inst.customers, facs, D.tolist(), numeric_mode="rational")


def test_equal_costs_collapse_to_first_budget():
    inst = MedianInstance(["x"], ["a", "b", "c"], [[1, 1, 1]], numeric_mode="rational")
    off = solve_sequence(inst, "exact")
    chain = build_cost_competitive(inst, off)
    assert chain.index_set == (1,)
    assert all(s == frozenset({"a"}) for s in chain.sets)


def test_star_cost_chain(kl3):
    off = solve_sequence(kl3.instance, "exact")
    chain = build_cost_competitive(kl3.instance, off, "det")
    rep = verify_chain(kl3.instance, chain, off)
    assert rep.nesting_ok and rep.sizes_within_budget()
    assert rep.max_cost_ratio <= 8


def test_cost_chain_rejects_non_metric():
    inst = MedianInstance(["x", "y"], ["f", "g"], [[1, 0], [0, 3]], numeric_mode="rational")
    with pytest.raises(InstanceError, match="metric"):
        build_cost_competitive(inst, solve_sequence(inst, "exact"))


def _composition_holds(inst, off, chain):
    K = chain.index_set
    beta = bid_ratio_on_costs(chain, off)
    for k in range(1, off.n + 1):
        k_minus = max(i for i in K if i <= k)
        tail = sum(off.cost(i) for i in K if i >= k_minus)
        assert cost(inst, chain[k]) <= 2 * tail
        assert tail <= beta * off.cost(k)
    return beta


@pytest.mark.parametrize("reps", [1, 2, 3])
def test_cost_chain_composition(reps):
    for inst in random_suite(8, (3, 6), (6, 12), base_seed=40):
        if reps > 1:
            inst = _with_duplicate_columns(inst, reps)
        off = solve_sequence(inst, "exact")
        for bidder in ("det", "rand"):
            chain = build_cost_competitive(inst, off, bidder, seed=1)
            rep = verify_chain(inst, chain, off)
            assert rep.nesting_ok and rep.sizes_within_budget()
            beta = _composition_holds(inst, off, chain)
            assert rep.max_cost_ratio <= 2 * beta
            if bidder == "det":
                assert rep.max_cost_ratio <= 8


def test_zero_cost_budgets_join_index_set():
    assert bid_index_set([5, 2, 0, 0], BidSet((2, 5))) == (1, 2, 3, 4)
    assert bid_index_set([5, 2, 2, 1], BidSet((2, 5))) == (1, 2)


def test_unknown_bid_rejected():
    with pytest.raises(InstanceError):
        bid_index_set([3, 2, 1], BidSet((4,)))


def test_all_zero_costs():
    inst = MedianInstance(["x"], ["a", "b"], [[0, 0]], numeric_mode="rational")
    chain = build_cost_competitive(inst, solve_sequence(inst, "exact"))
    assert chain.index_set == (1, 2)
    assert [len(s) for s in chain.sets] == [1, 2]
    assert chain[1] <= chain[2]


def test_size_chain_unions(kl3):
    off = solve_sequence(kl3.instance, "exact")
    chain = build_size_competitive(kl3.instance, off, BidSet((1, 2, 4)))
    assert chain[3] == off.facility_set(1) | off.facility_set(2) | off.facility_set(4)
    assert len(chain[3]) <= 12
    assert chain.paid[2] == (1, 2, 4)


def test_size_chain_single_budget():
    inst = MedianInstance(["x"], ["a"], [[2]], numeric_mode="rational")
    off = solve_sequence(inst, "exact")
    chain = build_size_competitive(inst, off, BidSet((1,)))
    assert chain.sets == (frozenset({"a"}),)


def test_size_chain_rejects_foreign_bids(kl3):
    off = solve_sequence(kl3.instance, "exact")
    with pytest.raises(InstanceError):
        build_size_competitive(kl3.instance, off, BidSet((1, 9)))


def test_size_chain_random_suite():
    for inst in random_suite(10, (4, 9), (6, 14), base_seed=70):
        off = solve_sequence(inst, "exact")
        chain = build_size_competitive(inst, off, doubling_bids(Universe.integers(off.n)))
        rep = verify_chain(inst, chain, off)
        assert rep.nesting_ok and rep.costs_within_opt()
        assert all(r[1] <= 4 * r[0] for r in rep.rows)


def test_size_chain_on_adversarial_gadget():
    adv = build_adversarial(4)
    off = solve_sequence(adv.instance, "exact")
    chain = build_size_competitive(adv.instance, off, doubling_bids(Universe.integers(off.n)))
    rep = verify_chain(adv.instance, chain, off)
    assert rep.nesting_ok and rep.costs_within_opt()
    assert all(r[1] <= 4 * r[0] for r in rep.rows)


def test_verify_chain_is_non_judgmental(kl3):
    off = solve_sequence(kl3.instance, "exact")
    rep = verify_chain(kl3.instance, off.sets, off)
    assert not rep.nesting_ok  # {f} then {f, g1} then G
    assert rep.max_cost_ratio == 1


def test_verify_chain_all_facilities(kl3):
    inst = kl3.instance
    off = solve_sequence(inst, "exact")
    full = FacilityChain(tuple(frozenset(inst.facilities) for _ in range(off.n)), "size")
    rep = verify_chain(inst, full, off)
    assert rep.max_cost_ratio <= 1 and rep.rows[0][5] == inst.n_facilities


def test_randomized_mean_ratio():
    for inst in random_suite(3, (6, 9), (8, 14), base_seed=90):
        off = solve_sequence(inst, "exact")
        stats = randomized_cost_ratios(inst, off, off, range(1000))
        assert stats.seeds == 1000
        assert np.all(stats.per_k_mean <= 2 * math.e * 1.05)
