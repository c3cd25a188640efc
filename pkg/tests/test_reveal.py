from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from osow import InstanceError
from osow.benchmarks import ConcaveClosureSolution, opt_bruteforce, solve_optc
from osow.generators import GeneratorSpec, fuzz_corpus, gen
from osow.greedy import run_greedy
from osow.io import parse_instance, serialize_instance
from osow.objectives import all_subsets
from osow.reveal import (
    build_reveal,
    g_value,
    is_revealed,
    reveal_tie_key,
    revealed_table_instance,
    verify_reveal,
)


def test_sr_ex_hats(sr):
    rev = build_reveal(sr)
    assert rev.dummy == 3
    assert rev.hats[1].R == frozenset({1, 3})
    assert rev.hats[2].R == frozenset({1, 2})
    assert all(h not in sr.menu(t) and h.R not in {e.R for e in sr.menu(t)} for t, h in rev.hats.items())
    assert rev.instance.is_deterministic()
    assert sum(g_value(rev, i, rev.N_hat) for i in (1, 2)) == Fraction(5, 4)
    assert all(g_value(rev, i, ()) == 0 for i in (1, 2))


def test_sr_ex_verify(sr):
    rep = verify_reveal(sr)
    assert rep.holds, rep.failures
    assert rep.alg_G == rep.alg_hat == 1
    assert rep.opt_hat >= Fraction(5, 4)
    assert rep.picks_only_real
    assert rep.closure_identity and rep.restriction_identity


def test_empty_support_gives_dummy_only_hats():
    spec = GeneratorSpec("stochastic-rewards", T=2, params={"edges": [[1, 1, "0"], [2, 2, "0"]]})
    G = gen(spec)
    empty = ConcaveClosureSolution(
        Fraction(0), {e.id: Fraction(0) for e in G.N}, {1: frozenset(), 2: frozenset()}, {1: {frozenset(): 1}, 2: {frozenset(): 1}}
    )
    assert empty.violations(G) == []
    rev = build_reveal(G, empty)
    assert all(h.R == {rev.dummy} for h in rev.hats.values())
    for i in (1, 2):
        for h in rev.hats.values():
            assert g_value(rev, i, [h]) == 0


def test_deterministic_g_equals_f():
    G = gen(GeneratorSpec("random-explicit", n_resources=2, T=3, seed=9, stochastic=False))
    rev = build_reveal(G)
    for i, f in G.objectives.items():
        for Z in all_subsets(G.N_of(i), subfeasible_only=True):
            assert g_value(rev, i, Z) == f(Z)
    rep = verify_reveal(G, rev)
    assert rep.alg_G == rep.alg_hat


def test_dummy_contributes_nothing(sr):
    rev = build_reveal(sr)
    H = rev.instance
    assert rev.dummy not in H.objectives
    assert H.F(rev.dummy, H.N) == 0


def test_no_hat_for_empty_menu():
    spec = GeneratorSpec("stochastic-rewards", T=3, params={"edges": [[1, 1, "0.5"], [1, 3, "1"]]})
    rev = build_reveal(gen(spec))
    assert sorted(rev.hats) == [1, 3]


def test_rejects_invalid_solution(sr):
    sol = solve_optc(sr)
    sol.y["r2t2"] = Fraction(2)
    with pytest.raises(InstanceError):
        build_reveal(sr, sol)


def test_tie_key_prefers_real(sr):
    rev = build_reveal(sr)
    real = sr.by_id["r1t1"]
    hat = rev.hats[1]
    assert is_revealed(hat) and not is_revealed(real)
    assert reveal_tie_key(real) < reveal_tie_key(hat)
    # without the rule the revealed configuration can win a tie
    _, _, trace = run_greedy(rev.instance, tie_key=reveal_tie_key)
    assert trace.steps[0].chosen == real


def test_table_dump_round_trip(sr):
    rev = build_reveal(sr)
    flat = revealed_table_instance(rev)
    again = parse_instance(serialize_instance(flat))
    for i in (1, 2):
        for X in all_subsets(rev.instance.N_of(i)):
            ids = [e.id for e in X]
            assert again.objectives[i]([again.by_id[x] for x in ids]) == g_value(rev, i, X)
    assert opt_bruteforce(again)[1] == opt_bruteforce(rev.instance)[1]
    assert again.meta["revealed"] == ["hat:1", "hat:2"]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**5))
def test_verify_reveal_fuzz(seed):
    (G,) = list(fuzz_corpus(1, seed, max_N=5))
    rep = verify_reveal(G)
    assert rep.holds, rep.failures
    for t, hat_gain, best in rep.dominance:
        assert hat_gain <= best
