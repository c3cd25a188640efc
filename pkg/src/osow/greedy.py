"""Non-adaptive Greedy, its eta-approximate variant, and adaptive Greedy.

Greedy picks, at every arrival, the configuration maximizing
``sum_i F_i(e | ALG(t))``.  Ties go to the smallest configuration id unless
a custom ``tie_key`` is supplied (the reveal construction uses one that
ranks its added configurations last).
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .model import ZERO, Allocation, Configuration, Instance
from .stochastic import sample_outcome

Candidate = tuple[Configuration, Fraction]
Selector = Callable[[int, Sequence[Candidate]], Configuration]


@dataclass
class GreedyStep:
    t: int
    candidates: tuple[Candidate, ...]
    chosen: Configuration | None
    gains: dict[int, Fraction]
    max_marginal: Fraction
    achieved: Fraction
    eta_ok: bool = True


@dataclass
class GreedyTrace:
    steps: list[GreedyStep] = field(default_factory=list)
    eta: Fraction = Fraction(1)

    def chosen(self) -> frozenset:
        return frozenset(s.chosen for s in self.steps if s.chosen is not None)

    def alg_before(self, t: int) -> frozenset:
        """``ALG(t)``: configurations chosen strictly before arrival ``t``."""
        return frozenset(s.chosen for s in self.steps if s.t < t and s.chosen is not None)

    def gain(self, i: int, t: int) -> Fraction:
        for s in self.steps:
            if s.t == t:
                return s.gains.get(i, ZERO)
        return ZERO

    def total_gain(self) -> Fraction:
        return sum((g for s in self.steps for g in s.gains.values()), ZERO)

    def to_csv(self, resources: Sequence[int]) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["arrival", "chosen"] + [f"delta_{i}" for i in resources] + ["max_marginal"])
        for s in self.steps:
            w.writerow(
                [s.t, s.chosen.id if s.chosen else ""]
                + [str(s.gains.get(i, ZERO)) for i in resources]
                + [str(s.max_marginal)]
            )
        return buf.getvalue()


def _default_key(e: Configuration):
    return e.id


def _step(inst: Instance, t: int, alg: frozenset, tie_key) -> tuple[Candidate, ...]:
    menu = sorted(inst.menu(t), key=tie_key)
    return tuple((e, inst.marginal_total(e, alg)) for e in menu)


def _gains(inst: Instance, e: Configuration, alg: frozenset) -> dict[int, Fraction]:
    after = alg | {e}
    return {i: inst.F(i, after) - inst.F(i, alg) for i in inst.objectives}


def run_greedy(inst: Instance, tie_key=_default_key) -> tuple[Allocation, Fraction, GreedyTrace]:
    """Non-adaptive Greedy on the expected value functions ``F_i``."""
    alg: frozenset = frozenset()
    trace = GreedyTrace()
    for a in inst.arrivals:
        cands = _step(inst, a.t, alg, tie_key)
        if not cands:
            trace.steps.append(GreedyStep(a.t, (), None, {}, ZERO, ZERO))
            continue
        best, best_val = cands[0]
        for e, v in cands[1:]:
            if v > best_val:
                best, best_val = e, v
        gains = _gains(inst, best, alg)
        trace.steps.append(GreedyStep(a.t, cands, best, gains, best_val, best_val))
        alg = alg | {best}
    return Allocation.from_elements(alg), inst.total(alg), trace


def run_greedy_eta(inst: Instance, selector: Selector, eta=Fraction(1)) -> tuple[Allocation, Fraction, GreedyTrace]:
    """Greedy whose per-step choice is delegated to ``selector``.

    ``selector(t, candidates)`` receives ``(configuration, marginal)``
    pairs in id order and must return one of the configurations.  Each step
    records whether the choice reached ``eta`` times the best marginal.
    """
    eta = Fraction(eta)
    alg: frozenset = frozenset()
    trace = GreedyTrace(eta=eta)
    for a in inst.arrivals:
        cands = _step(inst, a.t, alg, _default_key)
        if not cands:
            trace.steps.append(GreedyStep(a.t, (), None, {}, ZERO, ZERO))
            continue
        pick = selector(a.t, cands)
        vals = dict(cands)
        if pick not in vals:
            raise ValueError(f"selector returned {pick!r}, which is not in the menu of arrival {a.t}")
        mx = max(vals.values())
        achieved = vals[pick]
        gains = _gains(inst, pick, alg)
        trace.steps.append(GreedyStep(a.t, cands, pick, gains, mx, achieved, achieved >= eta * mx))
        alg = alg | {pick}
    return Allocation.from_elements(alg), inst.total(alg), trace


def exact_selector(t: int, cands: Sequence[Candidate]) -> Configuration:
    best, best_val = cands[0]
    for e, v in cands[1:]:
        if v > best_val:
            best, best_val = e, v
    return best


def adversarial_selector(eta) -> Selector:
    """Worst choice still meeting the eta guarantee (ties to the largest id)."""
    eta = Fraction(eta)

    def select(t: int, cands: Sequence[Candidate]) -> Configuration:
        mx = max(v for _, v in cands)
        ok = [(v, e) for e, v in cands if v >= eta * mx]
        lo = min(v for v, _ in ok)
        return max((e for v, e in ok if v == lo), key=lambda e: e.id)

    return select


def first_id_selector(t: int, cands: Sequence[Candidate]) -> Configuration:
    return cands[0][0]


# adaptive Greedy ---------------------------------------------------------

_AVAILABILITY_FAMILIES = {"coverage"}


def _check_adaptive(inst: Instance) -> None:
    bad = sorted(i for i, o in inst.objectives.items() if o.family not in _AVAILABILITY_FAMILIES)
    if bad:
        raise ValueError(
            f"adaptive Greedy needs availability-style (coverage) objectives; resources {bad} are not"
        )


def _adaptive_choice(inst: Instance, t: int, active: dict[int, frozenset]) -> Configuration | None:
    best, best_val = None, None
    for e in inst.menu(t):
        v = ZERO
        for i in e.R:
            o = inst.objectives.get(i)
            if o is None:
                continue
            p = inst.activation.p(i, e)
            if p:
                v += p * (o(active[i] | {e}) - o(active[i]))
        if best_val is None or v > best_val:
            best, best_val = e, v
    return best


def run_adaptive_greedy_sim(inst: Instance, rng: random.Random) -> tuple[Fraction, list[tuple[int, str | None, frozenset]]]:
    """One sample path of adaptive Greedy.

    At each arrival the expected gain is computed against the *realized*
    active sets, so resources already consumed offer nothing.  Returns the
    realized value and a log of ``(t, chosen id, active subset)``.
    """
    _check_adaptive(inst)
    active = {i: frozenset() for i in inst.objectives}
    log = []
    for a in inst.arrivals:
        e = _adaptive_choice(inst, a.t, active)
        if e is None:
            log.append((a.t, None, frozenset()))
            continue
        A = sample_outcome(e, inst.activation, rng)
        for i in A:
            if i in active:
                active[i] = active[i] | {e}
        log.append((a.t, e.id, A))
    value = sum((inst.objectives[i](X) for i, X in active.items()), ZERO)
    return value, log


def adaptive_greedy_value(inst: Instance) -> Fraction:
    """Exact expected value of adaptive Greedy by enumerating outcomes."""
    _check_adaptive(inst)

    def rec(k: int, active: dict[int, frozenset]) -> Fraction:
        if k == len(inst.arrivals):
            return sum((inst.objectives[i](X) for i, X in active.items()), ZERO)
        t = inst.arrivals[k].t
        e = _adaptive_choice(inst, t, active)
        if e is None:
            return rec(k + 1, active)
        total = ZERO
        for A, prob in inst.activation.table(e):
            if prob:
                nxt = dict(active)
                for i in A:
                    if i in nxt:
                        nxt[i] = nxt[i] | {e}
                total += prob * rec(k + 1, nxt)
        return total

    return rec(0, {i: frozenset() for i in inst.objectives})
