from __future__ import annotations

import math
import random
from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import pick
from osow import Configuration, InstanceError
from osow.generators import corpus_spec, gen
from osow.objectives import all_subsets
from osow.properties import check_monotone, check_submodular
from osow.stochastic import (
    ActivationModel,
    EnumerationCapError,
    expected_marginal,
    expected_value,
    gamma,
    sample_outcome,
)


def brute_F(inst, i, S):
    """Independent route: sum over activation patterns of f_i."""
    Si = [e for e in S if i in e.R]
    f = inst.objectives[i]
    total = Fraction(0)
    for k in range(len(Si) + 1):
        for X in combinations(Si, k):
            prob = Fraction(1)
            for e in Si:
                p = inst.activation.p(i, e)
                prob *= p if e in X else 1 - p
            total += prob * f(frozenset(X))
    return total


def test_gamma_examples(sr):
    m = sr.activation
    assert gamma((), (), 1, m) == 1
    assert gamma(pick(sr, "r1t1"), pick(sr, "r1t1", "r1t2"), 1, m) == 0
    e = pick(sr, "r1t1")
    assert gamma(e, e, 1, m) == Fraction(1, 2)


def test_gamma_errors(sr):
    with pytest.raises(InstanceError):
        gamma((), pick(sr, "r2t2"), 1, sr.activation)
    a, b = Configuration("a", 1, frozenset({1})), Configuration("b", 1, frozenset({1, 2}))
    with pytest.raises(InstanceError):
        gamma((), [a, b], 1, ActivationModel({}))


def test_expected_value_examples(sr):
    f = sr.objectives[1]
    assert expected_value(f, pick(sr, "r1t1"), sr.activation) == Fraction(1, 2)
    assert expected_value(f, pick(sr, "r1t1", "r1t2"), sr.activation) == 1


def test_expected_value_deterministic_limit(reuse):
    f = reuse.objectives[1]
    for X in all_subsets(reuse.N):
        assert reuse.F(1, X) == f(X)


def test_expected_marginal_examples(sr):
    f = sr.objectives[1]
    e = sr.by_id["r1t2"]
    assert expected_marginal(f, e, pick(sr, "r1t1"), sr.activation) == Fraction(1, 2)
    assert expected_marginal(f, e, (), sr.activation) == f([e])
    zero = ActivationModel.independent({"r1t2": {1: 0}})
    zero.validate(sr.N)
    assert expected_marginal(f, e, pick(sr, "r1t1"), zero) == 0


def test_enumeration_cap():
    cs = [Configuration(f"c{t}", t, frozenset({1})) for t in range(1, 5)]
    m = ActivationModel.independent({e.id: {1: "1/2"} for e in cs})
    m.validate(cs)
    from osow.objectives import CoverageOracle

    with pytest.raises(EnumerationCapError):
        expected_value(CoverageOracle(1), cs, m, cap=3)


def test_joint_table_must_sum_to_one():
    with pytest.raises(InstanceError, match="sums to"):
        ActivationModel.joint({"a": [([1], "0.6"), ([], "0.6")]})


def test_joint_marginals():
    e = Configuration("a", 1, frozenset({1, 2}))
    m = ActivationModel.joint({"a": [([1], "1/3"), ([2], "1/6"), ([], "1/2")]})
    m.validate([e])
    assert m.p(1, e) == Fraction(1, 3)
    assert m.p(2, e) == Fraction(1, 6)


def test_independent_expands_to_product():
    e = Configuration("a", 1, frozenset({1, 2}))
    m = ActivationModel.independent({"a": {1: "1/2", 2: "1/4"}})
    m.validate([e])
    table = dict(m.table(e))
    assert table[frozenset({1, 2})] == Fraction(1, 8)
    assert sum(table.values()) == 1


def test_sample_point_masses():
    e = Configuration("a", 1, frozenset({1}))
    sure = ActivationModel.joint({"a": [([1], 1), ([], 0)]})
    never = ActivationModel.joint({"a": [([], 1)]})
    rng = random.Random(0)
    assert all(sample_outcome(e, sure, rng) == {1} for _ in range(50))
    assert all(sample_outcome(e, never, rng) == frozenset() for _ in range(50))


def test_sample_reproducible_and_frequencies():
    e = Configuration("a", 1, frozenset({1, 2}))
    rows = [([1], Fraction(1, 2)), ([2], Fraction(1, 3)), ([], Fraction(1, 6))]
    m = ActivationModel.joint({"a": rows})
    m.validate([e])
    a = [sample_outcome(e, m, random.Random(7)) for _ in range(3)]
    assert a[0] == a[1] == a[2]
    rng = random.Random(1)
    n = 100_000
    counts = {}
    for _ in range(n):
        A = sample_outcome(e, m, rng)
        counts[A] = counts.get(A, 0) + 1
    for A, p in rows:
        p = float(p)
        sigma = math.sqrt(p * (1 - p) / n)
        assert abs(counts.get(frozenset(A), 0) / n - p) <= 3 * sigma


@settings(max_examples=60, deadline=None)
@given(st.lists(st.fractions(0, 1, max_denominator=12), min_size=0, max_size=12))
def test_gamma_sums_to_one(ps):
    cs = [Configuration(f"c{t}", t, frozenset({1})) for t in range(1, len(ps) + 1)]
    m = ActivationModel.independent({e.id: {1: p} for e, p in zip(cs, ps)})
    m.validate(cs)
    total = sum(gamma(X, cs, 1, m) for X in all_subsets(cs))
    assert total == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_expected_marginal_identity_and_enumeration(k):
    inst = gen(corpus_spec(k, 11))
    rng = random.Random(k)
    for i, f in inst.objectives.items():
        Ni = sorted(inst.N_of(i), key=lambda e: e.id)
        if not Ni:
            continue
        e = rng.choice(Ni)
        S = frozenset(x for x in Ni if x.t != e.t and rng.random() < 0.5)
        by_t = {}
        for x in S:
            by_t.setdefault(x.t, x)
        S = frozenset(by_t.values())
        lhs = expected_marginal(f, e, S, inst.activation)
        assert lhs == inst.F(i, S | {e}) - inst.F(i, S)
        assert inst.F(i, S) == brute_F(inst, i, S)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_F_monotone_and_inherits_submodularity(k):
    inst = gen(corpus_spec(k, 12, max_T=4))
    for i, f in inst.objectives.items():
        ground = inst.N_of(i)
        F = lambda S, i=i: inst.F(i, S)  # noqa: E731
        dom = f.domain
        assert check_monotone(F, ground, dom).holds
        if dom == "full" and len(ground) <= 8 and check_submodular(f, ground).holds:
            assert check_submodular(F, ground, "full").holds


def test_marginals_match_joint_tables():
    inst = gen(corpus_spec(1, 0))
    for e in inst.N:
        for i in e.R:
            assert inst.activation.p(i, e) == sum(p for A, p in inst.activation.table(e) if i in A)
