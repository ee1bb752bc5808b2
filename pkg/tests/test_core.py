import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oblimed.core import (
    InstanceError,
    MedianInstance,
    cost,
    facility_distance,
    gamma,
    is_lambda_relaxed,
    metric_report,
)
from oblimed.generate import generate_random_metric


def test_cost_on_star(kl3):
    assert cost(kl3.instance, ["f"]) == 3
    assert cost(kl3.instance, ["g1"]) == 5
    assert cost(kl3.instance, ["g1", "g2", "g3"]) == 1


def test_cost_zero_when_every_customer_is_covered():
    inst = MedianInstance(["a", "b"], [1, 2], [[0, 5], [4, 0]], numeric_mode="rational")
    assert cost(inst, [1, 2]) == 0


def test_cost_empty_set_rejected(kl3):
    with pytest.raises(InstanceError, match="empty facility set"):
        cost(kl3.instance, [])


def test_weighted_cost():
    inst = MedianInstance(["a", "b"], ["f"], [[1], [2]], weights=[Fraction(1, 2), 3], numeric_mode="rational")
    assert cost(inst, ["f"]) == Fraction(13, 2)


@pytest.mark.parametrize(
    "dist, msg",
    [
        ([[1, -1]], "negative"),
        ([[1, float("nan")]], "finite"),
        ([[1]], "shape"),
    ],
)
def test_invalid_instances(dist, msg):
    with pytest.raises(InstanceError, match=msg):
        MedianInstance(["a"], ["f", "g"], dist, numeric_mode="f64")


def test_empty_customers_rejected():
    with pytest.raises(InstanceError):
        MedianInstance([], ["f"], [], numeric_mode="f64")


def test_facility_distance(kl3):
    assert facility_distance(kl3.instance, "g1", "g2") == Fraction(8, 3)
    assert facility_distance(kl3.instance, "g1", "g1") == Fraction(2, 3)
    inst = MedianInstance(["x"], ["f"], [[0]], numeric_mode="rational")
    assert facility_distance(inst, "f", "f") == 0


def test_metric_star(kl3):
    rep = metric_report(kl3.instance)
    assert rep.is_metric and rep.lambda_star == 1 and rep.witness is None


def test_lambda_hand_example():
    # d_xf = 1, d_xg = 0, d_yf = 0, d_yg = 3
    inst = MedianInstance(["x", "y"], ["f", "g"], [[1, 0], [0, 3]], numeric_mode="rational")
    rep = metric_report(inst)
    assert not rep.is_metric
    assert rep.lambda_star == 3
    assert rep.witness == ("g", "x", "f", "y")
    assert is_lambda_relaxed(inst, 3) and not is_lambda_relaxed(inst, Fraction(299, 100))


def test_lambda_infinite_on_zero_denominator():
    inst = MedianInstance(["x", "y"], ["f", "g"], [[0, 0], [0, 1]], numeric_mode="rational")
    rep = metric_report(inst)
    assert rep.lambda_star == float("inf")


def test_lambda_matches_quadruple_scan():
    rng = np.random.default_rng(5)
    for _ in range(30):
        D = rng.integers(0, 6, size=(4, 3))
        inst = MedianInstance(list(range(4)), list("abc"), D.tolist(), numeric_mode="rational")
        best = Fraction(1)
        inf = False
        for f, g in itertools.product(range(3), repeat=2):
            for x, y in itertools.product(range(4), repeat=2):
                num = int(D[y, f])
                den = int(D[x, f] + D[x, g] + D[y, g])
                if den == 0:
                    inf |= num > 0
                else:
                    best = max(best, Fraction(num, den))
        lam = metric_report(inst).lambda_star
        assert lam == (float("inf") if inf else best)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), c=st.fractions(min_value=Fraction(1, 7), max_value=9))
def test_lambda_scale_invariant(seed, c):
    rng = np.random.default_rng(seed)
    D = rng.integers(0, 10, size=(4, 3)).tolist()
    inst = MedianInstance(list(range(4)), list(range(3)), D, numeric_mode="rational")
    assert metric_report(inst).lambda_star == metric_report(inst.scaled(c)).lambda_star


def test_float_mode_tolerates_rounding():
    inst = MedianInstance(["x", "y"], ["f", "g"], [[1.0, 1.0], [1.0, 3.0 * (1 + 1e-12)]], numeric_mode="f64")
    assert metric_report(inst).is_metric


def test_generated_instances_are_metric():
    for s in range(5):
        assert metric_report(generate_random_metric(8, 6, seed=s)).is_metric
        assert metric_report(generate_random_metric(8, 6, seed=s, numeric_mode="f64")).is_metric


def test_generator_is_deterministic():
    a = generate_random_metric(5, 4, seed=11)
    b = generate_random_metric(5, 4, seed=11)
    assert np.array_equal(a.dist, b.dist)


def test_facility_distance_triangle():
    inst = generate_random_metric(7, 6, seed=2)
    fs = inst.facilities
    for f, g, h in itertools.product(fs, repeat=3):
        assert facility_distance(inst, f, h) <= facility_distance(inst, f, g) + facility_distance(inst, g, h)


def test_cost_monotone_under_inclusion():
    inst = generate_random_metric(6, 5, seed=3)
    subsets = [s for r in range(1, 6) for s in itertools.combinations(inst.facilities, r)]
    for X in subsets:
        for Y in subsets:
            if set(X) <= set(Y):
                assert cost(inst, Y) <= cost(inst, X)


def test_gamma_unique_nearest():
    # d'(f1, g1) = 1, d'(f1, g2) = 2 through the single customer
    inst = MedianInstance(["x"], ["f1", "g1", "g2"], [[0, 1, 2]], numeric_mode="rational")
    assert gamma(inst, ["f1"], ["g1", "g2"]) == frozenset({"g1"})


def test_gamma_self_nearest():
    inst = MedianInstance(["x", "y", "z"], ["a", "b", "c"], [[0, 5, 5], [5, 0, 5], [5, 5, 0]], numeric_mode="rational")
    assert gamma(inst, ["a", "b"], ["a", "b", "c"]) == frozenset({"a", "b"})


def _check_gamma(inst, A, B):
    G = gamma(inst, A, B)
    assert G <= set(B) and len(G) <= len(set(A))

    def near(mu, S):
        return min(facility_distance(inst, mu, s) for s in S)

    for mu in A:
        assert near(mu, G) == near(mu, B)
    for g in G:
        rest = G - {g}
        if rest:
            assert any(near(mu, rest) != near(mu, B) for mu in A)
    return G


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_gamma_properties_and_service_bound(seed):
    rng = np.random.default_rng(seed)
    inst = generate_random_metric(int(rng.integers(3, 9)), 6, seed=seed)
    fs = inst.facilities
    A = list(rng.choice(fs, size=int(rng.integers(1, 4)), replace=False))
    B = list(rng.choice(fs, size=int(rng.integers(1, 6)), replace=False))
    G = _check_gamma(inst, A, B)
    for i, _ in enumerate(inst.customers):
        row = inst.dist[i]

        def d(S):
            return min(row[inst.index_of(s)] for s in S)

        assert d(G) <= 2 * d(A) + d(B)
