"""Exact offline benchmarks and the LP-free dual certificate.

* ``opt_bruteforce``: best non-adaptive allocation under ``sum_i F_i``.
* ``aopt_expectimax``: best adaptive non-anticipative policy that chooses a
  configuration at each arrival and then observes its active subset.
* ``solve_optc``: the concave-closure relaxation, solved exactly as an LP.
* ``build_certificate`` / ``verify_certificate``: dual witnesses showing
  ``ALG >= OPT / zeta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Mapping

from .greedy import GreedyTrace
from .lp import LinearProgram, LPSolution, simplex_solve
from .model import ZERO, Allocation, Configuration, Instance, ordered
from .objectives import all_subsets

OPT_CAP = 10**7
AOPT_CAP = 10**6
OPTC_CAP = 2**20


class CapExceeded(ValueError):
    """The exact computation is larger than the configured cap."""


def opt_bruteforce(inst: Instance, cap: int = OPT_CAP) -> tuple[Allocation, Fraction]:
    """Exhaustive non-adaptive optimum; the lexicographically least maximizer.

    Options at each arrival are the menu in id order followed by "no action".
    """
    size = inst.allocations_count()
    if size > cap:
        raise CapExceeded(f"{size} allocations exceed the cap {cap}")
    options = [list(inst.menu(a.t)) + [None] for a in inst.arrivals]
    best, best_val = None, None
    for combo in product(*options):
        S = frozenset(e for e in combo if e is not None)
        v = inst.total(S)
        if best_val is None or v > best_val:
            best, best_val = S, v
    if best is None:
        return Allocation({}), ZERO
    return Allocation.from_elements(best), best_val


@dataclass
class PolicyNode:
    """Decision at one arrival and the subtree for every observed outcome."""

    t: int
    choice: Configuration | None
    value: Fraction
    branches: dict[frozenset, PolicyNode | None] = field(default_factory=dict)

    def size(self) -> int:
        return 1 + sum(b.size() for b in self.branches.values() if b is not None)


def aopt_state_space(inst: Instance) -> int:
    n = 1
    for a in inst.arrivals:
        n *= sum(len(inst.activation.table(e)) for e in inst.menu(a.t)) + 1
    return n


def aopt_expectimax(inst: Instance, cap: int = AOPT_CAP) -> tuple[PolicyNode | None, Fraction]:
    """Optimal adaptive value by expectimax over arrivals in order.

    The state is, per resource, the set of configurations in which it was
    realized active so far; the leaf value is ``sum_i f_i(active_i)``.
    """
    size = aopt_state_space(inst)
    if size > cap:
        raise CapExceeded(f"adaptive state space {size} exceeds the cap {cap}")
    res = list(inst.objectives)
    pos = {i: k for k, i in enumerate(res)}
    arrivals = [a.t for a in inst.arrivals]
    memo: dict[tuple[int, tuple], tuple[Fraction, PolicyNode | None]] = {}

    def leaf(state):
        return sum((inst.objectives[i](state[pos[i]]) for i in res), ZERO)

    def rec(k: int, state: tuple) -> tuple[Fraction, PolicyNode | None]:
        if k == len(arrivals):
            return leaf(state), None
        key = (k, state)
        hit = memo.get(key)
        if hit is not None:
            return hit
        t = arrivals[k]
        best = None
        for e in list(inst.menu(t)) + [None]:
            if e is None:
                v, child = rec(k + 1, state)
                branches = {frozenset(): child}
            else:
                v = ZERO
                branches = {}
                for A, prob in inst.activation.table(e):
                    if not prob:
                        continue
                    nxt = list(state)
                    for i in A:
                        if i in pos:
                            nxt[pos[i]] = nxt[pos[i]] | {e}
                    cv, child = rec(k + 1, tuple(nxt))
                    v += prob * cv
                    branches[A] = child
            if best is None or v > best[0]:
                best = (v, PolicyNode(t, e, v, branches))
        memo[key] = best
        return best

    value, policy = rec(0, tuple(frozenset() for _ in res))
    return policy, value


# concave closure ---------------------------------------------------------


def _alpha_name(i: int, X: frozenset) -> str:
    return f"a[{i}|{','.join(e.id for e in ordered(X))}]"


def build_optc_lp(inst: Instance, cap: int = OPTC_CAP) -> LinearProgram:
    """LP whose optimum is ``OPT^c``.

    Variables ``y_e`` per configuration and ``alpha_i(X)`` per resource and
    subfeasible ``X ⊆ N_i``.  Rows: at most one unit of ``y`` per arrival,
    each ``alpha_i`` is a distribution, and ``P(e ∈ X) <= p_{i,e} y_e``.
    """
    columns = {}
    total = 0
    for i in inst.objectives:
        Ni = inst.N_of(i)
        if not Ni:
            continue
        subsets = list(all_subsets(Ni, subfeasible_only=True))
        total += len(subsets)
        if total > cap:
            raise CapExceeded(f"more than {cap} concave-closure columns")
        columns[i] = subsets

    lp = LinearProgram("max")
    for e in inst.N:
        lp.add_variable(f"y[{e.id}]", 0, tag=("y", e))
    for i, subsets in columns.items():
        f = inst.objectives[i]
        for X in subsets:
            lp.add_variable(_alpha_name(i, X), f(X), tag=("alpha", i, X))
    for a in inst.arrivals:
        menu = inst.menu(a.t)
        if menu:
            lp.add_constraint({f"y[{e.id}]": 1 for e in menu}, "<=", 1, name=f"arrival[{a.t}]")
    for i, subsets in columns.items():
        lp.add_constraint({_alpha_name(i, X): 1 for X in subsets}, "=", 1, name=f"dist[{i}]")
        for e in ordered(inst.N_of(i)):
            coeffs = {_alpha_name(i, X): 1 for X in subsets if e in X}
            coeffs[f"y[{e.id}]"] = -inst.activation.p(i, e)
            lp.add_constraint(coeffs, "<=", 0, name=f"cap[{i},{e.id}]")
    return lp


@dataclass
class ConcaveClosureSolution:
    value: Fraction
    y: dict[str, Fraction]
    O: dict[int, frozenset]
    beta: dict[int, dict[frozenset, Fraction]]
    lp: LinearProgram | None = None
    lp_solution: LPSolution | None = None

    def violations(self, inst: Instance) -> list[str]:
        """Empty iff every structural invariant holds exactly."""
        out = []
        for e in inst.N:
            if self.y.get(e.id, ZERO) < 0:
                out.append(f"y[{e.id}] < 0")
        for a in inst.arrivals:
            s = sum((self.y.get(e.id, ZERO) for e in inst.menu(a.t)), ZERO)
            if s > 1:
                out.append(f"arrival {a.t}: sum y = {s} > 1")
        total = ZERO
        for i in inst.objectives:
            beta = self.beta.get(i, {})
            Ni = inst.N_of(i)
            expected_O = frozenset(e for e in Ni if self.y.get(e.id, ZERO) > 0)
            if self.O.get(i, frozenset()) != expected_O:
                out.append(f"O_{i} mismatch")
            if Ni and sum(beta.values(), ZERO) != 1:
                out.append(f"beta_{i} does not sum to 1")
            for X, b in beta.items():
                if b < 0:
                    out.append(f"beta_{i} negative")
                if not X <= self.O.get(i, frozenset()) and b > 0:
                    out.append(f"beta_{i} supported outside O_{i}")
            for e in Ni:
                mass = sum((b for X, b in beta.items() if e in X), ZERO)
                if mass > inst.activation.p(i, e) * self.y.get(e.id, ZERO):
                    out.append(f"beta_{i} overloads {e.id}")
            total += sum((b * inst.objectives[i](X) for X, b in beta.items()), ZERO)
        if total != self.value:
            out.append(f"value {self.value} != sum of beta-weighted values {total}")
        return out

    def closure_value(self, inst: Instance, i: int) -> Fraction:
        """``F_i^c(Y^c) = sum_X beta_i(X) f_i(X)``."""
        f = inst.objectives[i]
        return sum((b * f(X) for X, b in self.beta.get(i, {}).items()), ZERO)


def solve_optc(inst: Instance, cap: int = OPTC_CAP) -> ConcaveClosureSolution:
    lp = build_optc_lp(inst, cap)
    sol = simplex_solve(lp)
    y = {}
    beta: dict[int, dict[frozenset, Fraction]] = {i: {} for i in inst.objectives}
    for name, val in sol.assignment.items():
        tag = lp.tags[name]
        if tag[0] == "y":
            y[tag[1].id] = val
        elif val > 0:
            beta[tag[1]][tag[2]] = val
    O = {
        i: frozenset(e for e in inst.N_of(i) if y.get(e.id, ZERO) > 0) for i in inst.objectives
    }
    return ConcaveClosureSolution(sol.value, y, O, beta, lp, sol)


# dual certificate ----------------------------------------------------------


@dataclass(frozen=True)
class DualCertificate:
    lam: Mapping[tuple[int, int], Fraction]
    theta: Mapping[int, Fraction]
    zeta: Fraction = Fraction(2)


def build_certificate(inst: Instance, trace: GreedyTrace, opt_alloc: Allocation) -> DualCertificate:
    """``lambda_{i,t} = F_i(opt_t | ALG(t))`` and ``theta_i = sum_t Delta_{i,t}``."""
    steps = {s.t: s for s in trace.steps}
    if set(steps) != {a.t for a in inst.arrivals}:
        raise ValueError("trace does not cover the arrivals of this instance")
    for e in list(trace.chosen()) + list(opt_alloc.elements):
        if inst.by_id.get(e.id) != e:
            raise ValueError(f"{e.id} is not a configuration of {inst.name}")
    lam: dict[tuple[int, int], Fraction] = {}
    theta = {i: ZERO for i in inst.objectives}
    for a in inst.arrivals:
        t = a.t
        before = trace.alg_before(t)
        opt_t = opt_alloc.choice.get(t)
        for i in inst.objectives:
            if opt_t is None:
                lam[(i, t)] = ZERO
            else:
                lam[(i, t)] = inst.F(i, before | {opt_t}) - inst.F(i, before)
            theta[i] += steps[t].gains.get(i, ZERO)
    return DualCertificate(lam, theta, Fraction(2))


@dataclass
class CertificateCheck:
    holds: bool
    slack_sum: Fraction
    slack_cover: dict[int, Fraction]
    negative: list[str]


def verify_certificate(
    inst: Instance, cert: DualCertificate, greedy_total: Fraction, opt_alloc: Allocation
) -> tuple[bool, CertificateCheck]:
    """Check both certificate inequalities exactly and report slacks."""
    negative = [f"lambda{k}" for k, v in cert.lam.items() if v < 0]
    negative += [f"theta[{i}]" for i, v in cert.theta.items() if v < 0]
    lhs = sum(cert.lam.values(), ZERO) + sum(cert.theta.values(), ZERO)
    slack_sum = cert.zeta * greedy_total - lhs
    opt = opt_alloc.elements
    cover = {}
    for i in inst.objectives:
        lam_i = sum((v for (j, _), v in cert.lam.items() if j == i), ZERO)
        cover[i] = cert.theta.get(i, ZERO) + lam_i - inst.F(i, opt)
    holds = not negative and slack_sum >= 0 and all(s >= 0 for s in cover.values())
    return holds, CertificateCheck(holds, slack_sum, cover, negative)
