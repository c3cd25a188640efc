from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import pick
from osow import Arrival, Configuration, InstanceError, Resource, build_instance
from osow.generators import corpus_spec, gen
from osow.io import parse_instance, serialize_instance
from osow.model import Allocation, as_value, is_subfeasible, ordered, restrict
from osow.objectives import CoverageOracle


def test_sr_ex_shape(sr):
    assert len(sr.N) == 3
    assert sorted(e.id for e in sr.N_of(1)) == ["r1t1", "r1t2"]
    assert [e.id for e in sr.N_of(2)] == ["r2t2"]
    assert [e.id for e in sr.menu(1)] == ["r1t1"]


def test_reuse_ex_shape(reuse):
    assert len(reuse.N) == 3
    assert [reuse.time(t) for t in (1, 2, 3)] == [1, 2, 3]


def test_empty_menus_only_allow_empty_allocation():
    inst = build_instance(resources=[1], arrivals=3, configurations=[], objectives={1: CoverageOracle(1)})
    assert inst.allocations_count() == 1
    assert inst.total(frozenset()) == 0


def test_is_subfeasible(sr):
    assert is_subfeasible(pick(sr, "r1t1", "r2t2"), sr)
    assert not is_subfeasible(pick(sr, "r1t2", "r2t2"), sr)
    assert is_subfeasible(frozenset(), sr)


def test_is_subfeasible_rejects_foreign_element(sr):
    with pytest.raises(InstanceError):
        is_subfeasible([Configuration("zz", 1, frozenset({1}))], sr)


def test_restrict(sr):
    S = pick(sr, "r1t1", "r2t2")
    assert restrict(S, 1) == pick(sr, "r1t1")
    assert restrict(S, Resource(9, dummy=True)) == frozenset()
    assert restrict(sr.N_of(1), 1) == sr.N_of(1)


@pytest.mark.parametrize(
    "kwargs, message",
    [
        ({"resources": [1, 1]}, "duplicate resource"),
        ({"configurations": [Configuration("a", 1, frozenset({1})), Configuration("a", 2, frozenset({1}))]}, "duplicate configuration"),
        ({"configurations": [Configuration("a", 1, frozenset({7}))]}, "unknown resources"),
        ({"arrivals": [Arrival(1, Fraction(2)), Arrival(2, Fraction(1))]}, "strictly increasing"),
        ({"configurations": [Configuration("a", 1, frozenset())]}, "empty resource set"),
    ],
)
def test_build_errors(kwargs, message):
    base = {
        "resources": [1],
        "arrivals": 2,
        "configurations": [Configuration("a", 1, frozenset({1}))],
        "objectives": {},
    }
    base.update(kwargs)
    with pytest.raises(InstanceError, match=message):
        build_instance(**base)


def test_same_resource_set_twice_in_one_menu_rejected():
    cs = [Configuration("a", 1, frozenset({1})), Configuration("b", 1, frozenset({1}))]
    with pytest.raises(InstanceError, match="same resource set"):
        build_instance(resources=[1], arrivals=1, configurations=cs, objectives={})


def test_allocation_checks_arrival(sr):
    e = sr.by_id["r1t1"]
    with pytest.raises(InstanceError):
        Allocation({2: e})
    with pytest.raises(InstanceError):
        Allocation.from_elements(pick(sr, "r1t2", "r2t2"))


def test_as_value_is_exact():
    assert as_value("0.1") == Fraction(1, 10)
    assert as_value("3/7") == Fraction(3, 7)
    with pytest.raises(InstanceError):
        as_value(0.1)


def test_dummy_resource_contributes_nothing(sr):
    assert sr.F(99, sr.N) == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_menus_partition_and_order(k):
    inst = gen(corpus_spec(k, 5))
    seen = [e for t in sorted(inst.menus) for e in inst.menu(t)]
    assert sorted(seen, key=lambda e: e.id) == sorted(inst.N, key=lambda e: e.id)
    assert all(e.t == t for t, m in inst.menus.items() for e in m)
    seq = ordered(inst.N)
    assert all(a.t <= b.t for a, b in zip(seq, seq[1:]))
    for r in inst.resources:
        once = restrict(inst.N, r.index)
        assert once <= frozenset(inst.N)
        assert restrict(once, r.index) == once


@pytest.mark.parametrize("fixture", ["sr", "reuse"])
def test_fixtures_round_trip(fixture, request):
    inst = request.getfixturevalue(fixture)
    text = serialize_instance(inst)
    again = parse_instance(text)
    assert again == inst
    assert serialize_instance(again) == text
