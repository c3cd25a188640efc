from __future__ import annotations

import math
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from osow.greedy import run_greedy
from osow.uiid import (
    UIID_FIXTURES,
    ArrivalType,
    CountBudget,
    CountCoverage,
    CountTable,
    DRViolation,
    TypeDistribution,
    estimate_ratio,
    expected_count_value,
    realize,
    run_uiid_greedy,
    sample_path,
)
from osow import InstanceError


def point_mass(V=1, p="1/2"):
    ty = ArrivalType("a", (("a1", frozenset({1})), ("a2", frozenset({2}))), {"a1": {"type": "independent", "p": {1: p}}})
    objs = {1: CountCoverage(1, ["a1"]), 2: CountCoverage(2, ["a2"])}
    return TypeDistribution("pm", (1, 2), (ty,), (Fraction(1),), V, objs)


def test_distribution_validation():
    ty = point_mass().types
    with pytest.raises(InstanceError):
        TypeDistribution("x", (1, 2), ty, (Fraction(1, 2),), 1, {})
    with pytest.raises(InstanceError):
        TypeDistribution("x", (1, 2), ty, (Fraction(1),), 0, {})


def test_sample_path_basics():
    assert sample_path(point_mass(V=5), 3) == ("a",) * 5
    assert len(sample_path(point_mass(V=1), 3)) == 1
    d = UIID_FIXTURES["uiid-obm"]()
    assert sample_path(d, "s") == sample_path(d, "s")


def test_sample_path_frequencies():
    d = UIID_FIXTURES["uiid-obm"]()
    d.V = 10_000
    seq = sample_path(d, 1)
    n = len(seq)
    assert abs(seq.count("a") / n - 0.5) <= 3 * math.sqrt(0.25 / n)


def test_realize_ids_and_kinds():
    d = UIID_FIXTURES["uiid-sr"]()
    inst = realize(d, ("a", "c", "a"))
    assert sorted(e.id for e in inst.N) == ["a1#1", "a1#3", "a2#1", "a2#3", "c3#2"]
    assert [a.type_label for a in inst.arrivals] == ["a", "c", "a"]


def test_uiid_greedy_one_arrival_matches_adversarial():
    d = point_mass(V=1)
    inst = realize(d, ("a",))
    assert run_uiid_greedy(d, 0) == run_greedy(inst)[1] == 1


def test_uiid_greedy_deterministic_budget():
    ty = ArrivalType("a", (("a1", frozenset({1})), ("a2", frozenset({2}))))
    objs = {1: CountBudget(1, 3, {"a1": 2}), 2: CountBudget(2, 2, {"a2": 1})}
    d = TypeDistribution("b", (1, 2), (ty,), (Fraction(1),), 4, objs)
    # greedy on counts: gains 2, then 1 vs 1 (tie to a1), then 1, then 1 -> 5
    assert run_uiid_greedy(d, 0) == 5
    assert run_uiid_greedy(d, 0) == run_uiid_greedy(d, 0)


def test_dr_violation_is_lazy():
    ty = ArrivalType("a", (("a1", frozenset({1})),))
    convex = CountTable(1, ["a1"], {(k,): k * k for k in range(3)})
    d = TypeDistribution("c", (1,), (ty,), (Fraction(1),), 2, {1: convex})
    with pytest.raises(DRViolation):
        run_uiid_greedy(d, 0)


def test_estimate_errors_and_point_mass():
    with pytest.raises(ValueError):
        estimate_ratio(point_mass(), 0)
    est = estimate_ratio(point_mass(V=3), 50, seed=2)
    assert est.pathwise_ok and est.worst_path_ratio >= Fraction(1, 2)


def test_uiid_csv_rows():
    est = estimate_ratio(UIID_FIXTURES["uiid-obm"](), 20, 0)
    assert len(est.rows) == 20
    assert est.mean_alg == sum(r["ALG"] for r in est.rows) / 20


def binomial_pmf(n, q):
    return [math.comb(n, a) * q**a * (1 - q) ** (n - a) for a in range(n + 1)]


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.integers(0, 3), min_size=2, max_size=2),
    st.lists(st.fractions(0, 1, max_denominator=6), min_size=2, max_size=2),
    st.integers(1, 6),
)
def test_count_expectation_two_routes(counts, ps, budget):
    # route 1: binomial formula; route 2: realize the multiset and enumerate activation sets
    ty = ArrivalType(
        "x",
        (("k1", frozenset({1})), ("k2", frozenset({1, 2}))),
        {"k1": {"type": "independent", "p": {1: ps[0]}}, "k2": {"type": "independent", "p": {1: ps[1]}}},
    )
    f = CountBudget(1, budget, {"k1": 2, "k2": 3})
    d = TypeDistribution("two", (1, 2), (ty,), (Fraction(1),), 6, {1: f, 2: CountCoverage(2, ["k2"])})
    n1, n2 = counts
    inst = realize(d, ("x",) * (n1 + n2))
    chosen = [inst.by_id[f"k1#{t}"] for t in range(1, n1 + 1)]
    chosen += [inst.by_id[f"k2#{t}"] for t in range(n1 + 1, n1 + n2 + 1)]
    binom = expected_count_value(f, {"k1": counts[0], "k2": counts[1]}, {"k1": ps[0], "k2": ps[1]})
    assert binom == inst.F(1, chosen)
    # and a third, direct convolution over the two binomials
    direct = sum(
        p1 * p2 * min(Fraction(budget), 2 * a + 3 * b)
        for (a, p1), (b, p2) in product(enumerate(binomial_pmf(counts[0], ps[0])), enumerate(binomial_pmf(counts[1], ps[1])))
    )
    assert binom == direct


def test_count_oracle_reduces_to_set_oracle():
    # V no larger than the number of types, each type once: counts are 0/1 indicators
    d = UIID_FIXTURES["uiid-sr"]()
    inst = realize(d, ("a", "b", "c"))
    f = d.objectives[3]
    for S in ([], ["b3#2"], ["c3#3"], ["b3#2", "c3#3"]):
        counts = {k: 0 for k in f.kinds}
        for cid in S:
            counts[cid.split("#")[0]] += 1
        assert inst.objectives[3]([inst.by_id[c] for c in S]) == f(counts)


@pytest.mark.parametrize("name", sorted(UIID_FIXTURES))
def test_fixtures_are_dr(name):
    UIID_FIXTURES[name]().ensure_dr()
