from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import pick
from osow import Configuration, build_instance
from osow.objectives import BudgetAdditiveOracle, CoverageOracle, TableOracle, ZeroOracle, all_subsets
from osow.properties import (
    DomainModeError,
    arrival_consistent_orders,
    check_dr,
    check_eq1,
    check_interleaved_bound,
    check_lemma_all,
    check_monotone,
    check_so,
    check_submodular,
    instance_properties,
)
from test_objectives import REUSE_TABLE

ZEROS = {1: ZeroOracle(1), 2: ZeroOracle(2)}


def table_fn(values):
    """Plain dict-backed set function keyed by id tuples (no build-time checks)."""
    vals = {frozenset(k): Fraction(v) for k, v in values.items()}
    return lambda S: vals[frozenset(e.id for e in S)]


def reuse_table(inst):
    return TableOracle(1, inst.N, REUSE_TABLE)


def relabeled(order):
    """The published table with old arrivals placed at new arrivals 1, 2, 3 in ``order``."""
    new_t = {old: k for k, old in enumerate(order, start=1)}
    cs = [Configuration(f"c{old}", new_t[old], frozenset({1})) for old in (1, 2, 3)]
    table = {tuple(f"c{x[-1]}" for x in key): v for key, v in REUSE_TABLE.items()}
    f = TableOracle(1, cs, table)
    return f, sorted(cs, key=lambda e: e.t)


# monotone / submodular -------------------------------------------------------


def test_monotone_examples(reuse):
    a, b = Configuration("a", 1, frozenset({1})), Configuration("b", 2, frozenset({1}))
    assert check_monotone(CoverageOracle(1), [a, b]).holds
    rep = check_monotone(table_fn({(): 0, ("a",): 1, ("b",): 1, ("a", "b"): 0}), [a, b])
    assert not rep.holds
    assert rep.witness == (frozenset({a}), b)
    assert check_monotone(reuse_table(reuse), reuse.N).holds


def test_submodular_examples(reuse):
    rep = check_submodular(reuse_table(reuse), reuse.N)
    assert not rep.holds
    B, A, e = rep.witness
    assert (B, A, e) == (pick(reuse, "r1t2"), pick(reuse, "r1t2", "r1t3"), reuse.by_id["r1t1"])
    cs = [Configuration(f"c{t}", t, frozenset({1})) for t in (1, 2, 3)]
    assert check_submodular(BudgetAdditiveOracle(1, 3, {"c1": 2, "c2": 1, "c3": 2}), cs).holds
    assert check_submodular(CoverageOracle(1), cs).holds


def test_submodular_rejects_subfeasible_only(sr):
    from osow.objectives import ReusableOracle

    a, b = Configuration("a", 1, frozenset({1})), Configuration("b", 1, frozenset({1, 2}))
    with pytest.raises(DomainModeError):
        check_submodular(ReusableOracle(1, 1, {1: 1}), [a, b])


# submodular order ---------------------------------------------------------


def test_so_examples(reuse):
    assert check_so(reuse_table(reuse), reuse.N).holds
    f, order = relabeled((2, 3, 1))
    rep = check_so(f, order)
    assert not rep.holds
    B, A, C = rep.witness
    assert [e.id for e in B] == ["c2"] and sorted(e.id for e in A) == ["c2", "c3"] and [e.id for e in C] == ["c1"]


def test_reverse_relabel_is_still_so():
    # the published table is symmetric under reversing time, so reversal alone
    # does not break the order property; see the (2, 3, 1) case above
    f, order = relabeled((3, 2, 1))
    assert check_so(f, order).holds


def test_so_requires_arrival_consistent_order(reuse):
    with pytest.raises(ValueError):
        check_so(reuse_table(reuse), tuple(reversed(reuse.N)))


def test_submodular_is_so_for_every_order():
    cs = [Configuration(f"c{k}", t, frozenset({1})) for k, t in enumerate((1, 1, 2, 3))]
    f = BudgetAdditiveOracle(1, 4, {"c0": 1, "c1": 3, "c2": 2, "c3": 2})
    assert all(check_so(f, o).holds for o in arrival_consistent_orders(cs))


# order agreement ----------------------------------------------------------


def modular_table_oracle():
    a, b = Configuration("a", 1, frozenset({1})), Configuration("b", 1, frozenset({1, 2}))
    c = Configuration("c", 2, frozenset({1}))
    w = {"a": 2, "b": 1, "c": 3}
    table = {}
    for X in all_subsets([a, b, c]):
        ids = {e.id for e in X}
        v = sum(w[x] for x in ids)
        if "c" in ids:
            v -= len(ids & {"a", "b"})  # one term per cross-arrival pair keeps arrival 1 modular
        table[frozenset(ids)] = v
    inst = build_instance(resources=[1, 2], arrivals=2, configurations=[a, b, c], objectives=ZEROS)
    return TableOracle(1, [a, b, c], table), inst


def test_lemma_all_modular_table():
    f, inst = modular_table_oracle()
    rep = check_lemma_all(f, inst, inst.N_of(1))
    assert rep.precondition_met and rep.holds
    assert "2 orders" in rep.detail


def test_lemma_all_single_order(reuse):
    rep = check_lemma_all(reuse_table(reuse), reuse)
    assert rep.precondition_met and rep.holds
    assert "1 orders" in rep.detail


def test_lemma_all_reports_eq1_failure():
    a, b = Configuration("a", 1, frozenset({1})), Configuration("b", 1, frozenset({1, 2}))
    inst = build_instance(resources=[1, 2], arrivals=1, configurations=[a, b], objectives=ZEROS)
    rep = check_lemma_all(CoverageOracle(1), inst, [a, b])
    assert not rep.precondition_met
    eq1 = check_eq1(CoverageOracle(1), inst, [a, b])
    assert not eq1.holds and eq1.witness == (1, frozenset())


def test_eq1_examples(reuse):
    assert check_eq1(reuse_table(reuse), reuse).holds  # singleton menus
    a, b = Configuration("a", 1, frozenset({1})), Configuration("b", 1, frozenset({1, 2}))
    c = Configuration("c", 2, frozenset({1}))
    inst = build_instance(resources=[1, 2], arrivals=2, configurations=[a, b, c], objectives=ZEROS)
    additive = BudgetAdditiveOracle(1, 100, {"a": 1, "b": 2, "c": 3})
    assert check_eq1(additive, inst).holds


# interleaved partitions ----------------------------------------------------


def test_interleaved_examples(reuse):
    f = reuse_table(reuse)
    e1, e2, e3 = (reuse.by_id[x] for x in ("r1t1", "r1t2", "r1t3"))
    tight = check_interleaved_bound(f, [((), {e1}), ((), {e2, e3})])
    assert tight.holds and tight.detail == "lhs=2 rhs=2"
    # f(S) = 2; f({2}) = 1, f({1} | {}) = 1, f({3} | {2}) = 0
    rep = check_interleaved_bound(f, [({e1}, {e2}), ({e3}, ())])
    assert rep.holds and rep.detail == "lhs=2 rhs=2"


def test_interleaved_rejects_bad_blocks(reuse):
    f = reuse_table(reuse)
    e1, e2 = reuse.by_id["r1t1"], reuse.by_id["r1t2"]
    with pytest.raises(ValueError):
        check_interleaved_bound(f, [({e2}, {e1})])
    with pytest.raises(ValueError):
        check_interleaved_bound(f, [({e1}, {e1})])


# diminishing returns ---------------------------------------------------------


def test_dr_examples():
    bud = lambda x: min(Fraction(5), 2 * x[0] + 3 * x[1])  # noqa: E731
    assert check_dr(bud, [3, 3]).holds
    rep = check_dr(lambda x: Fraction(x[0] ** 2), [3])
    assert not rep.holds
    y, x, t = rep.witness
    assert (x[0] + 1) ** 2 - x[0] ** 2 > (y[0] + 1) ** 2 - y[0] ** 2
    assert check_dr(lambda x: Fraction(0), [2, 2]).holds


# instance-level -----------------------------------------------------------


def test_instance_properties_reuse(reuse):
    (rp,) = instance_properties(reuse)
    assert rp.get("monotone").holds
    assert rp.get("SO on arrival order").holds
    assert rp.get("submodular").holds is False


# property-based --------------------------------------------------------------


def random_table(rng, ground, full=True):
    """Monotone table by adding nonnegative increments along subsets."""
    table = {}
    for X in all_subsets(ground):
        ids = frozenset(e.id for e in X)
        floor = max((table[ids - {x}] for x in ids), default=Fraction(0))
        table[ids] = floor + (Fraction(rng.randint(0, 3)) if ids else 0)
    return table


def random_ground(rng, n):
    ts = sorted(rng.randint(1, max(1, n - 1)) for _ in range(n))
    return [Configuration(f"e{k}", t, frozenset({1})) for k, t in enumerate(ts)]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5))
def test_witnesses_reverify(seed, n):
    rng = random.Random(seed)
    ground = random_ground(rng, n)
    f = TableOracle(1, ground, random_table(rng, ground))
    sub = check_submodular(f, ground)
    assert sub.holds == (sub.witness is None)
    if not sub.holds:
        B, A, e = sub.witness
        assert B < A and e not in A and f(A | {e}) - f(A) > f(B | {e}) - f(B)
    for order in arrival_consistent_orders(ground):
        so = check_so(f, order)
        assert so.holds == (so.witness is None)
        if so.holds:
            continue
        B, A, C = so.witness
        assert f(A | C) - f(A) > f(B | C) - f(B)
        if sub.holds:
            pytest.fail("submodular function failed an order check")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 6))
def test_interleaved_bound_on_so_tables(seed, n):
    rng = random.Random(seed)
    ground = [Configuration(f"e{t}", t, frozenset({1})) for t in range(1, n + 1)]
    f = TableOracle(1, ground, random_table(rng, ground))
    if not check_so(f, ground).holds:
        return
    cut = sorted(rng.sample(range(n + 1), min(n + 1, rng.randint(1, 4))))
    blocks, prev = [], 0
    for k, c in enumerate(cut + [n]):
        chunk = ground[prev:c]
        prev = c
        mid = rng.randint(0, len(chunk))
        blocks.append((chunk[:mid], chunk[mid:]))
    assert check_interleaved_bound(f, blocks).holds


def test_subfeasible_so_quantifies_feasible_tuples_only():
    a, b = Configuration("a", 1, frozenset({1})), Configuration("b", 1, frozenset({1, 2}))
    c = Configuration("c", 2, frozenset({1}))
    seen = []

    def f(S):
        S = frozenset(S)
        assert len({e.t for e in S}) == len(S)
        seen.append(S)
        return Fraction(len(S))

    assert check_so(f, [a, b, c], domain="subfeasible").holds
    assert seen
    assert check_monotone(f, [a, b, c], domain="subfeasible").holds
