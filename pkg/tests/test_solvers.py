import itertools
import json
from fractions import Fraction

import pytest

from oblimed.core import InstanceError, MedianInstance, cost
from oblimed.generate import generate_random_metric
from oblimed.solvers import (
    exact_kmedian,
    greedy_size_approx,
    local_search_kmedian,
    monotone_repair,
    solve_sequence,
)


def brute_force(inst, k):
    best = None
    for X in itertools.combinations(inst.facilities, k):
        c = cost(inst, X)
        if best is None or c < best[1]:
            best = (frozenset(X), c)
    return best


def test_exact_on_star(kl3):
    assert exact_kmedian(kl3.instance, 1) == (frozenset({"f"}), 3)
    assert exact_kmedian(kl3.instance, 3) == (frozenset({"g1", "g2", "g3"}), 1)


def test_exact_sequence_on_star(kl3):
    off = solve_sequence(kl3.instance, "exact")
    assert off.costs[:3] == (3, Fraction(7, 3), 1)
    # k=2 optimum pairs the hub with the first leaf
    assert off.facility_set(2) == frozenset({"f", "g1"})


def test_exact_matches_brute_force():
    for s in range(6):
        inst = generate_random_metric(7, 6, seed=s)
        for k in range(1, 7):
            X, c = exact_kmedian(inst, k)
            assert (X, c) == brute_force(inst, k)


def test_exact_zero_cost_when_all_open():
    inst = MedianInstance(["a", "b"], ["f", "g"], [[0, 2], [2, 0]], numeric_mode="rational")
    assert exact_kmedian(inst, 2)[1] == 0


def test_exact_guards():
    inst = MedianInstance(["a"], list(range(26)), [[1] * 26], numeric_mode="f64")
    with pytest.raises(InstanceError, match="too large"):
        exact_kmedian(inst, 2)
    small = MedianInstance(["a"], [1, 2], [[1, 2]], numeric_mode="f64")
    for k in (0, 3):
        with pytest.raises(InstanceError):
            exact_kmedian(small, k)


def test_local_search_star(kl3):
    assert local_search_kmedian(kl3.instance, 1, 0.1) == (frozenset({"f"}), 3)


def test_local_search_all_facilities(kl3):
    inst = kl3.instance
    X, c = local_search_kmedian(inst, inst.n_facilities)
    assert X == frozenset(inst.facilities) and c == cost(inst, inst.facilities)


def test_local_search_within_five_opt():
    for s in range(10):
        inst = generate_random_metric(12, 10, seed=100 + s)
        _, opt = exact_kmedian(inst, 3)
        X, c = local_search_kmedian(inst, 3, 0.1)
        assert len(X) == 3 and c == cost(inst, X)
        assert opt <= c <= 5 * opt


def test_local_search_sequence_within_five_opt():
    for s in range(5):
        inst = generate_random_metric(10, 8, seed=200 + s)
        ls = solve_sequence(inst, "local_search", 0.1)
        ex = solve_sequence(inst, "exact")
        for k in range(1, 9):
            assert ex.cost(k) <= ls.cost(k) <= 5 * ex.cost(k)


def test_greedy_first_pick_on_star(kl3):
    assert greedy_size_approx(kl3.instance, 1, 3) == frozenset({"f"})


def test_greedy_zero_distance_target():
    inst = MedianInstance(["a"], ["far", "h"], [[9, 0]], numeric_mode="rational")
    assert greedy_size_approx(inst, 1, 0) == frozenset({"h"})


def test_greedy_unreachable():
    inst = MedianInstance(["a"], ["f"], [[1]], numeric_mode="rational")
    with pytest.raises(InstanceError, match="target unreachable"):
        greedy_size_approx(inst, 1, Fraction(1, 2))


def test_greedy_sequence_meets_opt():
    for s in range(5):
        inst = generate_random_metric(10, 8, seed=300 + s)
        gr = solve_sequence(inst, "greedy_size")
        ex = solve_sequence(inst, "exact")
        assert all(gr.cost(k) <= ex.cost(k) for k in range(1, 9))


def test_monotone_repair():
    sets, costs = monotone_repair(["a", "b", "c"], [3, 4, 1])
    assert costs == [3, 3, 1] and sets == ["a", "a", "c"]


def test_serialization(kl3):
    d = solve_sequence(kl3.instance, "exact").to_dict(kl3.instance)
    assert d["solver"] == "exact"
    assert d["per_k"][1] == {"k": 2, "facilities": ["f", "g1"], "cost": "7/3"}
    json.dumps(d)


def test_deterministic():
    inst = generate_random_metric(10, 8, seed=9)
    assert solve_sequence(inst, "local_search").sets == solve_sequence(inst, "local_search").sets
