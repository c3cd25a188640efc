"""The reveal construction: a stochasticity-free instance that exposes OPT^c.

From an instance ``G`` and an optimal concave-closure solution, every
arrival ``t`` with a nonempty menu gains one extra configuration
``hat_t = (R_hat_t, t)`` with ``R_hat_t = {i : O_i ∩ N_t ≠ ∅}``.  Choosing
``hat_t`` plays the distribution ``beta_i`` restricted to ``N_t``.  The new
objectives ``g_i`` fold the activation probabilities back in, so the
revealed instance is deterministic:

    g_i(S) = sum_{X ⊆ S_i} gamma(X, S_i) f_i(S_hat ∪ X),
    f_i(S_1 ∪ S_2) = sum_B beta_i(B) f_i(S_1 ∪ ⋃_{hat_t ∈ S_2} (N_t ∩ B)).

Greedy on the revealed instance must never pick a revealed configuration
and must match Greedy on ``G``; the revealed configurations alone must be
worth ``OPT^c(G)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable

from .benchmarks import OPT_CAP, ConcaveClosureSolution, opt_bruteforce, solve_optc
from .greedy import run_greedy
from .model import ONE, ZERO, Configuration, Instance, InstanceError, Resource, build_instance, ordered
from .objectives import ValueOracle
from .properties import PropertyReport, arrival_consistent_orders, check_monotone, check_so, check_submodular
from .stochastic import ENUMERATION_CAP, ActivationModel, EnumerationCapError

HAT_PREFIX = "hat:"


def hat_id(t: int) -> str:
    return f"{HAT_PREFIX}{t}"


def is_revealed(e: Configuration) -> bool:
    return e.id.startswith(HAT_PREFIX)


def reveal_tie_key(e: Configuration):
    """Real configurations first, then by id: breaks ties away from revealed ones."""
    return (is_revealed(e), e.id)


class ExtendedOracle:
    """``f_i`` extended to ``N ∪ N_hat`` through the closure distribution ``beta_i``."""

    def __init__(self, base: ValueOracle, beta: dict[frozenset, Fraction], menus: dict[int, tuple]):
        self.base = base
        self.owner = base.owner
        self.beta = sorted(beta.items(), key=lambda kv: (len(kv[0]), [e.key for e in ordered(kv[0])]))
        self.by_t = {t: frozenset(m) for t, m in menus.items()}
        self._memo: dict[tuple[frozenset, frozenset], Fraction] = {}

    def __call__(self, real: Iterable[Configuration], revealed_ts: Iterable[int]) -> Fraction:
        real = frozenset(e for e in real if self.owner in e.R)
        ts = frozenset(revealed_ts)
        key = (real, ts)
        v = self._memo.get(key)
        if v is None:
            if not ts:
                v = self.base(real)
            else:
                v = ZERO
                for B, b in self.beta:
                    picked = frozenset(e for e in B if e.t in ts)
                    v += b * self.base(real | picked)
            self._memo[key] = v
        return v


class GOracle(ValueOracle):
    """``g_i`` on the revealed instance (deterministic, folds in activation)."""

    family = "revealed"

    def __init__(self, base_inst: Instance, i: int, ext: ExtendedOracle, cap: int = ENUMERATION_CAP):
        super().__init__(i)
        self.domain = getattr(base_inst.objectives[i], "domain", "full")
        self.ext = ext
        self.model = base_inst.activation
        self.cap = cap

    def _evaluate(self, Si):
        real = [e for e in ordered(Si) if not is_revealed(e)]
        ts = frozenset(e.t for e in Si if is_revealed(e))
        i = self.owner
        sure = frozenset(e for e in real if self.model.p(i, e) == 1)
        unsure = [(e, self.model.p(i, e)) for e in real if 0 < self.model.p(i, e) < 1]
        if len(unsure) > self.cap:
            raise EnumerationCapError(f"{len(unsure)} uncertain elements exceed the enumeration cap {self.cap}")
        total = ZERO
        for bits in product((False, True), repeat=len(unsure)):
            prob = ONE
            X = set(sure)
            for (e, p), on in zip(unsure, bits):
                if on:
                    prob *= p
                    X.add(e)
                else:
                    prob *= 1 - p
            total += prob * self.ext(X, ts)
        return total

    def descriptor(self):
        raise InstanceError("revealed objectives are written out as explicit tables")


@dataclass
class RevealedInstance:
    base: Instance
    solution: ConcaveClosureSolution
    instance: Instance
    hats: dict[int, Configuration]
    dummy: int | None
    extended: dict[int, ExtendedOracle]

    @property
    def N_hat(self) -> frozenset:
        return frozenset(self.hats.values())


def build_reveal(G: Instance, sol: ConcaveClosureSolution | None = None) -> RevealedInstance:
    """Build the revealed instance; ``sol`` defaults to a fresh OPT^c solve."""
    if sol is None:
        sol = solve_optc(G)
    bad = sol.violations(G)
    if bad:
        raise InstanceError("concave-closure solution is invalid: " + "; ".join(bad))
    dummy_index = max(r.index for r in G.resources) + 1
    need_dummy = False
    hats: dict[int, Configuration] = {}
    for a in G.arrivals:
        menu = G.menu(a.t)
        if not menu:
            continue
        R = frozenset(i for i in G.objectives if any(e in sol.O[i] for e in menu))
        if not R or any(e.R == R for e in menu):
            R = R | {dummy_index}
            need_dummy = True
        hats[a.t] = Configuration(hat_id(a.t), a.t, R)
    resources = list(G.resources) + ([Resource(dummy_index, dummy=True)] if need_dummy else [])
    extended = {i: ExtendedOracle(G.objectives[i], sol.beta.get(i, {}), G.menus) for i in G.objectives}
    objectives = {i: GOracle(G, i, extended[i]) for i in G.objectives}
    meta = dict(G.meta)
    meta.update({"revealed_from": G.name, "revealed": sorted(e.id for e in hats.values())})
    if need_dummy:
        meta["dummy_resource"] = dummy_index
    inst = build_instance(
        resources=resources,
        arrivals=list(G.arrivals),
        configurations=list(G.N) + list(hats.values()),
        objectives=objectives,
        activation=ActivationModel({}),
        name=f"{G.name}-revealed",
        family=G.family,
        arrival_model=G.arrival_model,
        meta=meta,
    )
    return RevealedInstance(G, sol, inst, hats, dummy_index if need_dummy else None, extended)


def g_value(rev: RevealedInstance, i: int, S: Iterable[Configuration]) -> Fraction:
    return rev.instance.objectives[i](S)


@dataclass
class RevealReport:
    alg_G: Fraction
    alg_hat: Fraction
    opt_hat: Fraction | None
    optc: Fraction
    picks_only_real: bool
    dominance: list[tuple[int, Fraction, Fraction]] = field(default_factory=list)
    closure_identity: bool = True
    restriction_identity: bool = True
    properties: list[PropertyReport] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.failures


def verify_reveal(
    G: Instance,
    rev: RevealedInstance | None = None,
    opt_cap: int = OPT_CAP,
    check_orders: bool = True,
) -> RevealReport:
    """Check every claim about the revealed instance exactly."""
    if rev is None:
        rev = build_reveal(G)
    H = rev.instance
    _, alg_G, _ = run_greedy(G)
    alloc_hat, alg_hat, trace_hat = run_greedy(H, tie_key=reveal_tie_key)
    optc = rev.solution.value
    failures = []

    if alg_hat != alg_G:
        failures.append(f"Greedy values differ: {alg_hat} on the revealed instance vs {alg_G}")
    picks_only_real = not any(is_revealed(e) for e in alloc_hat.elements)
    if not picks_only_real:
        failures.append("Greedy picked a revealed configuration: " + ", ".join(sorted(alloc_hat.ids().values())))

    dominance = []
    for step in trace_hat.steps:
        hat = rev.hats.get(step.t)
        if hat is None or step.chosen is None:
            continue
        before = trace_hat.alg_before(step.t)
        best_real = max((v for e, v in step.candidates if not is_revealed(e)), default=ZERO)
        hat_gain = dict(step.candidates)[hat]
        dominance.append((step.t, hat_gain, best_real))
        if hat_gain > best_real:
            failures.append(f"arrival {step.t}: revealed gain {hat_gain} exceeds best real gain {best_real}")
        if before & rev.N_hat:
            failures.append(f"arrival {step.t}: revealed configurations chosen earlier")

    closure_ok = True
    for i in G.objectives:
        lhs = g_value(rev, i, rev.N_hat)
        if lhs != rev.solution.closure_value(G, i):
            closure_ok = False
            failures.append(f"resource {i}: g over revealed set {lhs} != closure value {rev.solution.closure_value(G, i)}")

    restriction_ok = True
    for S in _feasible_sets(G):
        for i in G.objectives:
            if g_value(rev, i, S) != G.F(i, S):
                restriction_ok = False
                failures.append(f"resource {i}: g differs from F on {[e.id for e in ordered(S)]}")
                break
        if not restriction_ok:
            break

    opt_hat = None
    if opt_cap:
        _, opt_hat = opt_bruteforce(H, cap=opt_cap)
        if opt_hat < optc:
            failures.append(f"OPT of revealed instance {opt_hat} < OPT^c {optc}")

    props = []
    for i, g in H.objectives.items():
        ground = ordered(H.N_of(i))
        dom = g.domain
        mono = check_monotone(g, ground, dom)
        mono.name = f"g_{i} monotone"
        props.append(mono)
        orders = list(arrival_consistent_orders(ground)) if check_orders and len(ground) <= 6 else [ground]
        for order in orders:
            so = check_so(g, order, dom, name=f"g_{i} SO")
            if not so.holds:
                props.append(so)
                break
        else:
            props.append(PropertyReport(f"g_{i} SO", True, None, len(orders), detail=f"{len(orders)} orders"))
        base = G.objectives[i]
        if base.domain == "full" and len(ground) <= 12:
            if check_submodular(base, ordered(G.N_of(i))).holds:
                sub = check_submodular(g, ground, dom)
                sub.name = f"g_{i} submodular"
                props.append(sub)
    for rep in props:
        if not rep.holds:
            failures.append(rep.describe())

    return RevealReport(
        alg_G=alg_G,
        alg_hat=alg_hat,
        opt_hat=opt_hat,
        optc=optc,
        picks_only_real=picks_only_real,
        dominance=dominance,
        closure_identity=closure_ok,
        restriction_identity=restriction_ok,
        properties=props,
        failures=failures,
    )


def _feasible_sets(G: Instance):
    options = [list(G.menu(a.t)) + [None] for a in G.arrivals]
    for combo in product(*options):
        yield frozenset(e for e in combo if e is not None)


def revealed_table_instance(rev: RevealedInstance) -> Instance:
    """The revealed instance with every ``g_i`` written out as an explicit table."""
    from .objectives import TableOracle, all_subsets

    H = rev.instance
    objectives = {}
    for i, g in H.objectives.items():
        ground = ordered(H.N_of(i))
        sub = g.domain == "subfeasible"
        if len(ground) > 16:
            raise InstanceError(f"resource {i}: {len(ground)} configurations are too many to tabulate")
        table = {frozenset(e.id for e in X): g(X) for X in all_subsets(ground, sub)}
        objectives[i] = TableOracle(i, ground, table, "subfeasible" if sub else "full")
    return build_instance(
        resources=list(H.resources),
        arrivals=list(H.arrivals),
        configurations=list(H.N),
        objectives=objectives,
        activation=ActivationModel({}),
        name=H.name,
        family=H.family,
        arrival_model=H.arrival_model,
        meta=H.meta,
    )
