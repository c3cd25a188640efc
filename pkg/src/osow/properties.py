"""Exhaustive exact checkers for structural properties of set functions.

Every checker returns a :class:`PropertyReport`.  A failing report carries
a witness that re-evaluates to a violation.  Checkers take any callable
``f(S) -> Fraction`` (value oracles, ``lambda S: inst.F(i, S)``, ...).

Submodularity, submodular order and DR are checked through their local
(one-step) forms, which are equivalent to the global definitions and
touch far fewer tuples:

* submodular  iff  ``f(e | B+a) <= f(e | B)`` for all ``B`` and ``a, e`` outside ``B``;
* ``pi`` is an SO  iff  ``f(C | B+j) <= f(C | B)`` whenever ``j`` succeeds ``B``
  and ``C`` succeeds ``j``;
* DR on a box  iff  ``f(y+e_s+e_t) - f(y+e_s) <= f(y+e_t) - f(y)``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations, product
from typing import Any, Callable, Iterable, Sequence

from .model import ZERO, Configuration, Instance, is_subfeasible, ordered

SetFunction = Callable[[Iterable[Configuration]], Fraction]

EXHAUSTIVE_CAP = 12
ORDER_CAP = 8
SAMPLES = 20000


@dataclass
class PropertyReport:
    name: str
    holds: bool
    witness: Any = None
    checked: int = 0
    mode: str = "exhaustive"
    precondition_met: bool = True
    detail: str = ""

    def __bool__(self) -> bool:
        return self.holds

    def describe(self) -> str:
        status = "holds" if self.holds else "FAILS"
        if not self.precondition_met:
            status = "precondition not met"
        text = f"{self.name}: {status} ({self.checked} tuples, {self.mode})"
        if self.witness is not None:
            text += f" witness={_fmt(self.witness)}"
        if self.detail:
            text += f" [{self.detail}]"
        return text


def _fmt(w: Any) -> str:
    if isinstance(w, Configuration):
        return w.id
    if isinstance(w, (set, frozenset)):
        return "{" + ",".join(e.id for e in ordered(w)) + "}"
    if isinstance(w, tuple):
        return "(" + ", ".join(_fmt(x) for x in w) + ")"
    if isinstance(w, dict):
        return "{" + ", ".join(f"{k}: {_fmt(v)}" for k, v in w.items()) + "}"
    return str(w)


def _domain(oracle) -> str:
    return getattr(oracle, "domain", "full")


def _subsets(elems: Sequence[Configuration], feasible: bool):
    for k in range(len(elems) + 1):
        for c in combinations(elems, k):
            if feasible and not is_subfeasible(c):
                continue
            yield frozenset(c)


class DomainModeError(ValueError):
    """The checker needs a full-domain oracle on this ground set."""


# monotone / submodular -------------------------------------------------------


def check_monotone(f: SetFunction, ground: Iterable[Configuration], domain: str | None = None) -> PropertyReport:
    """``f(S) <= f(S + e)`` for every in-domain pair, exhaustive below the cap."""
    elems = ordered(ground)
    feasible = (domain or _domain(f)) == "subfeasible"
    if len(elems) > EXHAUSTIVE_CAP and not feasible:
        return _sampled_monotone(f, elems)
    n = 0
    for S in _subsets(elems, feasible):
        base = f(S)
        ts = {e.t for e in S}
        for e in elems:
            if e in S or (feasible and e.t in ts):
                continue
            n += 1
            if f(S | {e}) < base:
                return PropertyReport("monotone", False, (S, e), n)
    return PropertyReport("monotone", True, None, n)


def _sampled_monotone(f, elems) -> PropertyReport:
    rng = random.Random(0)
    for n in range(1, SAMPLES + 1):
        S = frozenset(e for e in elems if rng.random() < 0.5)
        rest = [e for e in elems if e not in S]
        if not rest:
            continue
        e = rng.choice(rest)
        if f(S | {e}) < f(S):
            return PropertyReport("monotone", False, (S, e), n, mode="sampled")
    return PropertyReport("monotone", True, None, SAMPLES, mode="sampled")


def check_submodular(f: SetFunction, ground: Iterable[Configuration], domain: str | None = None) -> PropertyReport:
    """Local diminishing returns; the witness is ``(B, A, e)`` with ``A = B + a``.

    Tuples are visited with ``B`` by size then lexicographically, then
    ``e``, then ``a``, so the reported witness is deterministic.
    """
    elems = ordered(ground)
    if (domain or _domain(f)) == "subfeasible" and not is_subfeasible(elems):
        raise DomainModeError("submodularity needs a full-domain oracle; this one is defined on subfeasible sets only")
    if len(elems) > EXHAUSTIVE_CAP:
        return _sampled_submodular(f, elems)
    n = 0
    for B in _subsets(elems, False):
        fB = f(B)
        rest = [x for x in elems if x not in B]
        for e in rest:
            gain_B = f(B | {e}) - fB
            for a in rest:
                if a is e:
                    continue
                n += 1
                A = B | {a}
                if f(A | {e}) - f(A) > gain_B:
                    return PropertyReport("submodular", False, (B, A, e), n)
    return PropertyReport("submodular", True, None, n)


def _sampled_submodular(f, elems) -> PropertyReport:
    rng = random.Random(0)
    for n in range(1, SAMPLES + 1):
        B = frozenset(x for x in elems if rng.random() < 0.4)
        rest = [x for x in elems if x not in B]
        if len(rest) < 2:
            continue
        a, e = rng.sample(rest, 2)
        A = B | {a}
        if f(A | {e}) - f(A) > f(B | {e}) - f(B):
            return PropertyReport("submodular", False, (B, A, e), n, mode="sampled")
    return PropertyReport("submodular", True, None, SAMPLES, mode="sampled")


# submodular order ----------------------------------------------------------


def is_arrival_consistent(order: Sequence[Configuration]) -> bool:
    return all(a.t <= b.t for a, b in zip(order, order[1:]))


def check_so(
    f: SetFunction,
    order: Sequence[Configuration],
    domain: str | None = None,
    name: str = "submodular order",
    require_arrival_consistent: bool = True,
) -> PropertyReport:
    """``f(C | A) <= f(C | B)`` for ``pi``-nested ``B ⊆ A`` and ``C`` succeeding ``A``.

    The witness is ``(B, A, C)``.  In subfeasible mode only tuples with
    ``A ∪ C`` subfeasible are quantified.
    """
    order = tuple(order)
    if len(set(order)) != len(order):
        raise ValueError("order lists an element twice")
    if require_arrival_consistent and not is_arrival_consistent(order):
        raise ValueError("order is not arrival-consistent")
    feasible = (domain or _domain(f)) == "subfeasible"
    n = 0
    for k, j in enumerate(order):
        before, after = order[:k], order[k + 1 :]
        for B in _subsets(before, feasible):
            if feasible and j.t in {e.t for e in B}:
                continue
            A = B | {j}
            fB, fA = f(B), f(A)
            ts = {e.t for e in A}
            for C in _subsets(after, feasible):
                if not C:
                    continue
                if feasible and ts & {e.t for e in C}:
                    continue
                n += 1
                if f(A | C) - fA > f(B | C) - fB:
                    return PropertyReport(name, False, (B, A, C), n)
    return PropertyReport(name, True, None, n)


def arrival_consistent_orders(ground: Iterable[Configuration]):
    """All total orders of ``ground`` in which later arrivals come later."""
    by_t: dict[int, list[Configuration]] = {}
    for e in ordered(ground):
        by_t.setdefault(e.t, []).append(e)
    blocks = [list(permutations(by_t[t])) for t in sorted(by_t)]
    for combo in product(*blocks):
        yield tuple(e for block in combo for e in block)


def check_eq1(f: SetFunction, inst: Instance, ground: Iterable[Configuration] | None = None) -> PropertyReport:
    """Within-arrival modularity: ``f(N_t ∪ S) = f(S) + sum_{e∈N_t} f(e | S)``.

    Checked for every arrival and every ``S`` inside ``ground \\ N_t``
    (``ground`` defaults to ``N``); the witness is ``(t, S)``.
    """
    elems = ordered(ground if ground is not None else inst.N)
    n = 0
    for t in sorted({e.t for e in elems}):
        Nt = frozenset(e for e in elems if e.t == t)
        if len(Nt) < 2:
            continue
        others = [e for e in elems if e.t != t]
        if len(others) > EXHAUSTIVE_CAP:
            raise ValueError("ground set too large for the within-arrival modularity check")
        for S in _subsets(others, False):
            n += 1
            fS = f(S)
            if f(S | Nt) != fS + sum((f(S | {e}) - fS for e in Nt), ZERO):
                return PropertyReport("within-arrival modularity", False, (t, S), n)
    return PropertyReport("within-arrival modularity", True, None, n)


def check_lemma_all(f: SetFunction, inst: Instance, ground: Iterable[Configuration] | None = None) -> PropertyReport:
    """Every arrival-consistent order is an SO iff one is.

    Within-arrival modularity is a precondition: when it fails the report
    says so (``precondition_met=False``) and ``holds`` is not asserted.
    A failing report's witness is a pair ``(order that is SO, order that is not)``.
    """
    elems = ordered(ground if ground is not None else inst.N)
    if len(elems) > ORDER_CAP:
        raise ValueError(f"order enumeration is capped at {ORDER_CAP} elements")
    pre = check_eq1(f, inst, elems)
    domain = _domain(f)
    verdicts = []
    n = 0
    for order in arrival_consistent_orders(elems):
        rep = check_so(f, order, domain)
        n += rep.checked
        verdicts.append((order, rep.holds))
    good = [o for o, ok in verdicts if ok]
    bad = [o for o, ok in verdicts if not ok]
    agree = not good or not bad
    witness = None if agree else (good[0], bad[0])
    detail = f"{len(verdicts)} orders, {len(good)} SO"
    if not pre.holds:
        detail += f"; within-arrival modularity fails at {_fmt(pre.witness)}"
    return PropertyReport("all arrival orders agree", agree, witness, n, precondition_met=pre.holds, detail=detail)


# interleaved partitions ------------------------------------------------------


def check_interleaved_bound(
    f: SetFunction, blocks: Sequence[tuple[Iterable[Configuration], Iterable[Configuration]]]
) -> PropertyReport:
    """``f(S) <= f(∪E) + sum_l f(O_l | E_1 ∪ ... ∪ E_{l-1})`` for ``S = ∪(O_l ∪ E_l)``.

    ``blocks`` lists ``(O_l, E_l)`` pairs in order.  The blocks must be
    disjoint and alternate along some arrival-consistent order, which holds
    iff concatenating them gives nondecreasing arrival indices.
    """
    seq: list[Configuration] = []
    seen: set[Configuration] = set()
    Os, Es = [], []
    for O, E in blocks:
        O, E = frozenset(O), frozenset(E)
        for part in (O, E):
            if part & seen:
                raise ValueError("partition blocks are not disjoint")
            seen |= part
            seq.extend(ordered(part))
        Os.append(O)
        Es.append(E)
    if not is_arrival_consistent(seq):
        raise ValueError("blocks do not alternate along an arrival-consistent order")
    S = frozenset(seq)
    union_E = frozenset().union(*Es) if Es else frozenset()
    rhs = f(union_E)
    prefix: frozenset = frozenset()
    for O, E in zip(Os, Es):
        rhs += f(prefix | O) - f(prefix)
        prefix = prefix | E
    lhs = f(S)
    holds = lhs <= rhs
    return PropertyReport(
        "interleaved bound",
        holds,
        None if holds else (S, lhs, rhs),
        1,
        detail=f"lhs={lhs} rhs={rhs}",
    )


def interleaved_blocks(alg: dict[int, Configuration], opt: dict[int, Configuration], arrivals: Sequence[int]):
    """``O_t = opt_t \\ alg_t`` and ``E_t = alg_t`` for every arrival in order."""
    out = []
    for t in arrivals:
        a, o = alg.get(t), opt.get(t)
        E = frozenset([a]) if a is not None else frozenset()
        O = frozenset([o]) - E if o is not None else frozenset()
        out.append((O, E))
    return out


# lattice DR --------------------------------------------------------------


def check_dr(f: Callable[[tuple[int, ...]], Fraction], cap: Sequence[int]) -> PropertyReport:
    """Diminishing returns on the box ``0 <= x <= cap`` of count vectors.

    The witness is ``(y, x, t)`` with ``x = y + e_s`` and
    ``f(x + e_t) - f(x) > f(y + e_t) - f(y)``.
    """
    cap = tuple(int(c) for c in cap)
    dims = range(len(cap))
    n = 0

    def bump(v, k):
        w = list(v)
        w[k] += 1
        return tuple(w)

    for y in product(*(range(c + 1) for c in cap)):
        fy = f(y)
        for t in dims:
            if y[t] + 1 > cap[t]:
                continue
            yt = bump(y, t)
            gain_y = f(yt) - fy
            for s in dims:
                x = bump(y, s)
                if x[s] > cap[s] or x[t] + 1 > cap[t]:
                    continue
                n += 1
                if f(bump(x, t)) - f(x) > gain_y:
                    return PropertyReport("diminishing returns", False, (y, x, t), n)
    return PropertyReport("diminishing returns", True, None, n)


# instance-level helpers -------------------------------------------------------


@dataclass
class ResourceProperties:
    resource: int
    reports: list[PropertyReport] = field(default_factory=list)

    def get(self, name: str) -> PropertyReport | None:
        return next((r for r in self.reports if r.name == name), None)


def instance_properties(inst: Instance, expected: bool = False) -> list[ResourceProperties]:
    """Monotonicity, arrival-order SO and (full domain only) submodularity per resource.

    With ``expected`` the checks run on ``F_i`` instead of ``f_i``.
    """
    out = []
    for i, oracle in inst.objectives.items():
        f = (lambda S, i=i: inst.F(i, S)) if expected else oracle
        ground = ordered(inst.N_of(i))
        dom = _domain(oracle)
        rp = ResourceProperties(i)
        rp.reports.append(check_monotone(f, ground, dom))
        if len(ground) <= EXHAUSTIVE_CAP:
            rp.reports.append(check_so(f, ground, dom, name="SO on arrival order"))
        if dom == "full" or is_subfeasible(ground):
            rp.reports.append(check_submodular(f, ground, dom))
        out.append(rp)
    return out
