"""Instance generators for each setting, plus the two canonical fixtures.

Every family accepts explicit parameters (for hand-built fixtures) and
falls back to seeded random draws.  Probabilities are drawn from a grid of
tenths so all arithmetic stays small and exact.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations
from math import factorial
from typing import Any, Iterator

from .model import Arrival, Configuration, Instance, InstanceError, Resource, as_value, build_instance
from .objectives import (
    BudgetAdditiveOracle,
    CoverageOracle,
    ReusableOracle,
    SumOracle,
    TableOracle,
    WeightedConfigOracle,
    all_subsets,
)
from .stochastic import ActivationModel

FAMILIES = (
    "obm",
    "stochastic-rewards",
    "assortment-mnl",
    "patience",
    "reusable",
    "wholepage",
    "adwords",
    "random-explicit",
)

MAX_PATIENCE_RESOURCES = 3


@dataclass
class GeneratorSpec:
    family: str
    n_resources: int = 2
    T: int = 3
    menu_min: int = 1
    menu_max: int = 3
    p_low: Any = "0.1"
    p_high: Any = "1"
    seed: int = 0
    stochastic: bool = True
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise InstanceError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.n_resources < 1 or self.T < 0:
            raise InstanceError("need at least one resource and a nonnegative horizon")
        if not 0 <= self.menu_min <= self.menu_max:
            raise InstanceError("menu bounds must satisfy 0 <= menu_min <= menu_max")
        lo, hi = as_value(self.p_low), as_value(self.p_high)
        if not 0 <= lo <= hi <= 1:
            raise InstanceError("probability range must satisfy 0 <= p_low <= p_high <= 1")


def _grid_p(rng: random.Random, lo: Fraction, hi: Fraction) -> Fraction:
    choices = [Fraction(k, 10) for k in range(11) if lo <= Fraction(k, 10) <= hi]
    if not choices:
        return lo
    return rng.choice(choices)


def _cid(R, t: int) -> str:
    return "r" + "_".join(str(i) for i in sorted(R)) + f"t{t}"


def _edge_list(spec: GeneratorSpec, rng: random.Random, with_p: bool):
    """Explicit ``params["edges"]`` or random edges as ``(i, t, p)``."""
    if "edges" in spec.params:
        out = []
        for row in spec.params["edges"]:
            i, t = int(row[0]), int(row[1])
            p = as_value(row[2]) if len(row) > 2 else Fraction(1)
            out.append((i, t, p))
        return out
    lo, hi = as_value(spec.p_low), as_value(spec.p_high)
    out = []
    for t in range(1, spec.T + 1):
        k = rng.randint(spec.menu_min, min(spec.menu_max, spec.n_resources))
        for i in sorted(rng.sample(range(1, spec.n_resources + 1), k)):
            out.append((i, t, _grid_p(rng, lo, hi) if with_p else Fraction(1)))
    return out


def _times(spec: GeneratorSpec, rng: random.Random) -> list[Fraction]:
    if "times" in spec.params:
        return [as_value(x) for x in spec.params["times"]]
    times, now = [], Fraction(0)
    for _ in range(spec.T):
        now += Fraction(rng.randint(1, 4), 2)
        times.append(now)
    return times


def _resources(n: int) -> list[Resource]:
    return [Resource(i) for i in range(1, n + 1)]


def _gen_matching(spec, rng, name, with_p):
    edges = _edge_list(spec, rng, with_p)
    configs = [Configuration(_cid({i}, t), t, frozenset({i})) for i, t, _ in edges]
    marg = {_cid({i}, t): {i: str(p)} for i, t, p in edges if p != 1}
    return build_instance(
        resources=_resources(spec.n_resources),
        arrivals=spec.T,
        configurations=configs,
        objectives={i: CoverageOracle(i) for i in range(1, spec.n_resources + 1)},
        activation=ActivationModel.independent(marg),
        name=name,
        family=spec.family,
    )


def _gen_reusable(spec, rng, name):
    times = _times(spec, rng)
    if len(times) != spec.T:
        raise InstanceError("need one arrival time per arrival")
    edges = _edge_list(spec, rng, spec.stochastic)
    if "durations" in spec.params:
        durations = {int(i): as_value(d) for i, d in spec.params["durations"].items()}
    elif "duration" in spec.params:
        durations = {i: as_value(spec.params["duration"]) for i in range(1, spec.n_resources + 1)}
    else:
        durations = {i: Fraction(rng.randint(1, 8), 2) for i in range(1, spec.n_resources + 1)}
    tmap = {t: times[t - 1] for t in range(1, spec.T + 1)}
    configs = [Configuration(_cid({i}, t), t, frozenset({i})) for i, t, _ in edges]
    marg = {_cid({i}, t): {i: str(p)} for i, t, p in edges if p != 1}
    plus = spec.params.get("plus_coverage", False)
    objectives = {}
    for i in range(1, spec.n_resources + 1):
        r = ReusableOracle(i, durations[i], tmap)
        objectives[i] = SumOracle([(1, r), (1, CoverageOracle(i))]) if plus else r
    return build_instance(
        resources=_resources(spec.n_resources),
        arrivals=[Arrival(t, times[t - 1]) for t in range(1, spec.T + 1)],
        configurations=configs,
        objectives=objectives,
        activation=ActivationModel.independent(marg),
        name=name,
        family=spec.family,
    )


def mnl_choice(v0, weights: dict[int, Any], assortment) -> dict[int, Fraction]:
    """MNL choice probabilities ``phi(i, S) = v_i / (v_0 + sum_{j in S} v_j)``."""
    v0 = as_value(v0)
    den = v0 + sum((as_value(weights[j]) for j in assortment), Fraction(0))
    return {i: as_value(weights[i]) / den for i in assortment}


def _gen_assortment(spec, rng, name):
    configs, tables = [], {}
    customers = spec.params.get("customers")
    if customers is None:
        customers = []
        for t in range(1, spec.T + 1):
            k = rng.randint(1, spec.n_resources)
            K = sorted(rng.sample(range(1, spec.n_resources + 1), k))
            v = {i: str(rng.randint(1, 4)) for i in K}
            subsets = [list(c) for r in range(1, len(K) + 1) for c in combinations(K, r)]
            m = rng.randint(spec.menu_min, min(spec.menu_max, len(subsets)))
            chosen = sorted(rng.sample(subsets, m), key=lambda s: (len(s), s))
            customers.append({"t": t, "v0": str(rng.randint(1, 4)), "v": v, "assortments": chosen})
    for c in customers:
        t = int(c["t"])
        v = {int(i): w for i, w in c["v"].items()}
        assortments = c.get("assortments")
        if assortments is None:
            K = sorted(v)
            assortments = [list(s) for r in range(1, len(K) + 1) for s in combinations(K, r)]
        for S in assortments:
            S = frozenset(int(i) for i in S)
            cid = _cid(S, t)
            phi = mnl_choice(c["v0"], v, S)
            rows = [([], 1 - sum(phi.values()))] + [([i], phi[i]) for i in sorted(S)]
            configs.append(Configuration(cid, t, S))
            tables[cid] = rows
    return build_instance(
        resources=_resources(spec.n_resources),
        arrivals=spec.T,
        configurations=configs,
        objectives={i: CoverageOracle(i) for i in range(1, spec.n_resources + 1)},
        activation=ActivationModel.joint(tables),
        name=name,
        family=spec.family,
    )


def _patience_survival(spec) -> dict[int, Fraction]:
    """``P(patience >= k)`` for k = 1, 2, ... from a deterministic k or a distribution."""
    dist = spec.params.get("patience_dist")
    if dist is None:
        k = int(spec.params.get("patience", 1))
        dist = {k: 1}
    dist = {int(k): as_value(p) for k, p in dist.items()}
    if sum(dist.values()) != 1 or any(p < 0 for p in dist.values()):
        raise InstanceError("patience distribution must be nonnegative and sum to 1")
    top = max(dist)
    return {k: sum((p for kk, p in dist.items() if kk >= k), Fraction(0)) for k in range(1, top + 1)}


def _gen_patience(spec, rng, name):
    if spec.n_resources > MAX_PATIENCE_RESOURCES:
        raise InstanceError(f"patience family supports at most {MAX_PATIENCE_RESOURCES} real resources")
    survival = _patience_survival(spec)
    max_len = len(survival)
    edges = _edge_list(spec, rng, True)
    by_t: dict[int, dict[int, Fraction]] = {}
    for i, t, p in edges:
        by_t.setdefault(t, {})[i] = p
    n_real = spec.n_resources
    # the j-th ordering of one resource set is told apart by dummy resources {d_1..d_j}
    n_dummy = factorial(min(max_len, n_real)) - 1
    dummies = list(range(n_real + 1, n_real + 1 + n_dummy))
    configs, tables = [], {}
    for t in range(1, spec.T + 1):
        ps = by_t.get(t, {})
        for L in range(1, min(max_len, len(ps)) + 1):
            for subset in combinations(sorted(ps), L):
                for j, sigma in enumerate(permutations(subset)):
                    R = frozenset(subset) | frozenset(dummies[:j])
                    cid = "p" + "-".join(str(i) for i in sigma) + f"t{t}"
                    rows, reach = [], Fraction(1)
                    for pos, i in enumerate(sigma, start=1):
                        prob = reach * ps[i] * survival[pos]
                        rows.append(([i], prob))
                        reach *= 1 - ps[i]
                    rows = [r for r in rows if r[1]]
                    rows.append(([], 1 - sum((r[1] for r in rows), Fraction(0))))
                    configs.append(Configuration(cid, t, R))
                    tables[cid] = rows
    resources = _resources(n_real) + [Resource(d, dummy=True) for d in dummies]
    return build_instance(
        resources=resources,
        arrivals=spec.T,
        configurations=configs,
        objectives={i: CoverageOracle(i) for i in range(1, n_real + 1)},
        activation=ActivationModel.joint(tables),
        name=name,
        family=spec.family,
    )


def _random_bundles(spec, rng):
    out = []
    for t in range(1, spec.T + 1):
        pool = [
            frozenset(c)
            for r in (1, 2)
            for c in combinations(range(1, spec.n_resources + 1), r)
        ]
        m = rng.randint(spec.menu_min, min(spec.menu_max, len(pool)))
        for R in sorted(rng.sample(pool, m), key=lambda s: (len(s), sorted(s))):
            out.append(Configuration(_cid(R, t), t, R))
    return out


def _pas_for(configs, spec, rng):
    if not spec.stochastic:
        return ActivationModel({})
    lo, hi = as_value(spec.p_low), as_value(spec.p_high)
    marg = {}
    for e in configs:
        ps = {i: str(_grid_p(rng, lo, hi)) for i in sorted(e.R)}
        if any(p != "1" for p in ps.values()):
            marg[e.id] = ps
    return ActivationModel.independent(marg)


def _gen_wholepage(spec, rng, name):
    configs = _random_bundles(spec, rng)
    objectives = {}
    for i in range(1, spec.n_resources + 1):
        w = {e.id: str(rng.randint(1, 5)) for e in configs if i in e.R}
        cap = spec.params.get("capacity", rng.randint(1, 2))
        objectives[i] = WeightedConfigOracle(i, w, cap)
    return build_instance(
        resources=_resources(spec.n_resources),
        arrivals=spec.T,
        configurations=configs,
        objectives=objectives,
        activation=_pas_for(configs, spec, rng),
        name=name,
        family=spec.family,
    )


def _gen_adwords(spec, rng, name):
    edges = _edge_list(spec, rng, False)
    configs = [Configuration(_cid({i}, t), t, frozenset({i})) for i, t, _ in edges]
    objectives = {}
    for i in range(1, spec.n_resources + 1):
        bids = {e.id: str(rng.randint(1, 4)) for e in configs if i in e.R}
        objectives[i] = BudgetAdditiveOracle(i, rng.randint(1, 6), bids)
    return build_instance(
        resources=_resources(spec.n_resources),
        arrivals=spec.T,
        configurations=configs,
        objectives=objectives,
        activation=_pas_for(configs, spec, rng),
        name=name,
        family=spec.family,
    )


def _weighted_coverage_table(ground, rng, universe: int = 4):
    """Random weighted-coverage function: monotone and submodular."""
    weights = [rng.randint(1, 4) for _ in range(universe)]
    cover = {e.id: {u for u in range(universe) if rng.random() < 0.4} or {rng.randrange(universe)} for e in ground}
    table = {}
    for X in all_subsets(ground):
        items = set().union(*(cover[e.id] for e in X)) if X else set()
        table[frozenset(e.id for e in X)] = sum(weights[u] for u in items)
    return table


def _gen_random_explicit(spec, rng, name):
    configs = _random_bundles(spec, rng)
    objectives = {}
    for i in range(1, spec.n_resources + 1):
        ground = [e for e in configs if i in e.R]
        objectives[i] = TableOracle(i, ground, _weighted_coverage_table(ground, rng))
    return build_instance(
        resources=_resources(spec.n_resources),
        arrivals=spec.T,
        configurations=configs,
        objectives=objectives,
        activation=_pas_for(configs, spec, rng),
        name=name,
        family=spec.family,
    )


def gen(spec: GeneratorSpec, name: str | None = None) -> Instance:
    """Build one instance of ``spec.family``."""
    rng = random.Random(spec.seed)
    name = name or f"{spec.family}-{spec.seed}"
    f = spec.family
    if f == "obm":
        return _gen_matching(spec, rng, name, with_p=False)
    if f == "stochastic-rewards":
        return _gen_matching(spec, rng, name, with_p=True)
    if f == "reusable":
        return _gen_reusable(spec, rng, name)
    if f == "assortment-mnl":
        return _gen_assortment(spec, rng, name)
    if f == "patience":
        return _gen_patience(spec, rng, name)
    if f == "wholepage":
        return _gen_wholepage(spec, rng, name)
    if f == "adwords":
        return _gen_adwords(spec, rng, name)
    return _gen_random_explicit(spec, rng, name)


# canonical fixtures ----------------------------------------------------------

SR_EX_SPEC = GeneratorSpec(
    family="stochastic-rewards",
    n_resources=2,
    T=2,
    params={"edges": [[1, 1, "0.5"], [1, 2, "1"], [2, 2, "0.5"]]},
)

REUSE_EX_SPEC = GeneratorSpec(
    family="reusable",
    n_resources=1,
    T=3,
    stochastic=False,
    params={"edges": [[1, 1], [1, 2], [1, 3]], "times": ["1", "2", "3"], "duration": "1.5"},
)


def sr_ex() -> Instance:
    """Two resources, two arrivals; t1 -> {1} (p=1/2), t2 -> {1} (p=1) or {2} (p=1/2)."""
    return gen(SR_EX_SPEC, name="sr-ex")


def reuse_ex() -> Instance:
    """One reusable resource, arrivals at times 1, 2, 3, usage duration 3/2."""
    return gen(REUSE_EX_SPEC, name="reuse-ex")


FIXTURES = {"sr-ex": sr_ex, "reuse-ex": reuse_ex}


# fuzz corpus ---------------------------------------------------------------

CORPUS_FAMILIES = (
    "stochastic-rewards",
    "assortment-mnl",
    "adwords",
    "wholepage",
    "reusable",
    "reusable+coverage",
    "random-explicit",
    "obm",
)


def corpus_spec(k: int, seed: int, max_resources: int = 3, max_T: int = 5, max_menu: int = 3) -> GeneratorSpec:
    """The ``k``-th generator spec of a seeded fuzz corpus."""
    rng = random.Random(f"{seed}:{k}")
    fam = CORPUS_FAMILIES[k % len(CORPUS_FAMILIES)]
    params: dict[str, Any] = {}
    if fam == "reusable+coverage":
        fam = "reusable"
        params["plus_coverage"] = True
    n = rng.randint(1, max_resources)
    return GeneratorSpec(
        family=fam,
        n_resources=n,
        T=rng.randint(1, max_T),
        menu_min=0 if rng.random() < 0.15 else 1,
        menu_max=max_menu,
        seed=rng.randrange(2**31),
        stochastic=rng.random() < 0.85,
        params=params,
    )


def fuzz_corpus(trials: int, seed: int = 0, max_N: int | None = None, **kw) -> Iterator[Instance]:
    """Seeded stream of small instances mixing every fuzzed family.

    With ``max_N`` set, instances with more configurations are skipped (and
    replaced) so exactly ``trials`` instances are produced.
    """
    made, k = 0, 0
    while made < trials:
        spec = corpus_spec(k, seed, **kw)
        k += 1
        inst = gen(spec, name=f"fuzz-{seed}-{k - 1}")
        if max_N is not None and len(inst.N) > max_N:
            continue
        made += 1
        yield inst
