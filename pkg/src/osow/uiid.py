"""Unknown-IID arrivals: type distributions, count-vector objectives and Monte Carlo.

Each arrival draws a type from a fixed distribution.  A type carries a
menu of configuration kinds; selecting a kind adds one to its count.
Objectives are monotone functions of count vectors with diminishing
returns.  A sampled sequence of types becomes an ordinary instance, on
which Greedy and the concave-closure LP run unchanged.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import comb
from typing import Any, Mapping, Sequence

from .benchmarks import solve_optc
from .greedy import run_greedy
from .model import ZERO, Arrival, Configuration, Instance, InstanceError, Resource, as_value, build_instance
from .objectives import ValueOracle
from .properties import check_dr
from .stochastic import ActivationModel

Z_99 = 2.326
ONE_MINUS_INV_E = 1 - 1 / math.e


class DRViolation(ValueError):
    """A count-vector objective lacks diminishing returns."""


# count-vector objectives -----------------------------------------------------


class CountOracle:
    """Monotone function of the counts of the configuration kinds containing ``owner``."""

    family = "abstract"

    def __init__(self, owner: int, kinds: Sequence[str]):
        self.owner = owner
        self.kinds = tuple(kinds)

    def __call__(self, counts: Mapping[str, int]) -> Fraction:
        raise NotImplementedError

    def on_vector(self, x: Sequence[int]) -> Fraction:
        return self(dict(zip(self.kinds, x)))


class CountCoverage(CountOracle):
    """``min{1, total count}``."""

    family = "coverage"

    def __call__(self, counts):
        return Fraction(min(1, sum(counts.get(k, 0) for k in self.kinds)))


class CountBudget(CountOracle):
    """``min{B, sum_k bid_k * count_k}``."""

    family = "budget_additive"

    def __init__(self, owner: int, budget, bids: Mapping[str, Any]):
        super().__init__(owner, sorted(bids))
        self.budget = as_value(budget)
        self.bids = {k: as_value(v) for k, v in bids.items()}

    def __call__(self, counts):
        return min(self.budget, sum((self.bids[k] * counts.get(k, 0) for k in self.kinds), ZERO))


class CountTable(CountOracle):
    """Explicit values on count vectors (missing vectors raise)."""

    family = "table"

    def __init__(self, owner: int, kinds: Sequence[str], table: Mapping[tuple[int, ...], Any]):
        super().__init__(owner, kinds)
        self.table = {tuple(k): as_value(v) for k, v in table.items()}

    def __call__(self, counts):
        key = tuple(counts.get(k, 0) for k in self.kinds)
        try:
            return self.table[key]
        except KeyError:
            raise InstanceError(f"count table of resource {self.owner} has no entry for {key}") from None


class CountSetOracle(ValueOracle):
    """A count-vector objective viewed as a set function on a realized sequence."""

    family = "counts"

    def __init__(self, base: CountOracle, kind_of: Mapping[str, str]):
        super().__init__(base.owner)
        self.base = base
        self.kind_of = dict(kind_of)

    def _evaluate(self, Si):
        counts: dict[str, int] = {}
        for e in Si:
            k = self.kind_of[e.id]
            counts[k] = counts.get(k, 0) + 1
        return self.base(counts)

    def descriptor(self):
        raise InstanceError("count objectives are not part of the instance file format")


def expected_count_value(f: CountOracle, counts: Mapping[str, int], p: Mapping[str, Fraction]) -> Fraction:
    """``E f(K)`` with independent ``K_k ~ Binomial(counts_k, p_k)``."""
    kinds = [k for k in f.kinds if counts.get(k, 0)]
    total = ZERO
    for ks in product(*(range(counts[k] + 1) for k in kinds)):
        prob = Fraction(1)
        for k, a in zip(kinds, ks):
            n, q = counts[k], p.get(k, Fraction(1))
            prob *= comb(n, a) * q**a * (1 - q) ** (n - a)
        if prob:
            total += prob * f(dict(zip(kinds, ks)))
    return total


# type distributions ---------------------------------------------------------


@dataclass(frozen=True)
class ArrivalType:
    """Arrival type: configuration kinds ``(kind, R)`` and their activation specs."""

    label: str
    menu: tuple[tuple[str, frozenset], ...]
    activation: Mapping[str, Mapping[str, Any]] = field(default_factory=dict)


@dataclass
class TypeDistribution:
    name: str
    resources: tuple[int, ...]
    types: tuple[ArrivalType, ...]
    weights: tuple[Fraction, ...]
    V: int
    objectives: dict[int, CountOracle]
    _dr_checked: bool = field(default=False, repr=False)

    def __post_init__(self) -> None:
        self.weights = tuple(as_value(w) for w in self.weights)
        if len(self.weights) != len(self.types):
            raise InstanceError("one weight per type is required")
        if any(w < 0 for w in self.weights) or sum(self.weights) != 1:
            raise InstanceError("type weights must be nonnegative and sum to exactly 1")
        if self.V < 1:
            raise InstanceError("the horizon V must be at least 1")
        kinds = [k for ty in self.types for k, _ in ty.menu]
        if len(set(kinds)) != len(kinds):
            raise InstanceError("configuration kinds must be unique across types")
        self.kind_R = {k: R for ty in self.types for k, R in ty.menu}

    def ensure_dr(self) -> None:
        """Check diminishing returns up to ``V`` copies of each kind (once)."""
        if self._dr_checked:
            return
        for i, f in self.objectives.items():
            rep = check_dr(f.on_vector, [self.V] * len(f.kinds))
            if not rep.holds:
                raise DRViolation(f"objective of resource {i} lacks diminishing returns at {rep.witness}")
        self._dr_checked = True


def sample_path(dist: TypeDistribution, seed) -> tuple[str, ...]:
    """``V`` i.i.d. type labels; the same seed gives the same sequence."""
    rng = random.Random(seed)
    labels = [ty.label for ty in dist.types]
    cum, acc = [], Fraction(0)
    for w in dist.weights:
        acc += w
        cum.append(acc)
    out = []
    for _ in range(dist.V):
        u = Fraction(rng.random())
        out.append(labels[next(k for k, c in enumerate(cum) if u < c)])
    return tuple(out)


def realize(dist: TypeDistribution, seq: Sequence[str]) -> Instance:
    """The adversarial-style instance induced by one type sequence."""
    by_label = {ty.label: ty for ty in dist.types}
    configs, declared, kind_of, arrivals = [], {}, {}, []
    for t, label in enumerate(seq, start=1):
        ty = by_label[label]
        arrivals.append(Arrival(t, None, label))
        for kind, R in ty.menu:
            cid = f"{kind}#{t}"
            configs.append(Configuration(cid, t, frozenset(R)))
            kind_of[cid] = kind
            if kind in ty.activation:
                declared[cid] = dict(ty.activation[kind])
    return build_instance(
        resources=[Resource(i) for i in dist.resources],
        arrivals=arrivals,
        configurations=configs,
        objectives={i: CountSetOracle(f, kind_of) for i, f in dist.objectives.items()},
        activation=ActivationModel(declared),
        name=f"{dist.name}:{''.join(seq)}" if all(len(s) == 1 for s in seq) else f"{dist.name}:{'-'.join(seq)}",
        family="uiid",
        arrival_model={"kind": "uiid", "distribution": dist.name, "V": dist.V},
    )


def run_uiid_greedy(dist: TypeDistribution, seed) -> Fraction:
    """Greedy on one sampled sequence (adapts to arrivals, not to activation)."""
    dist.ensure_dr()
    _, value, _ = run_greedy(realize(dist, sample_path(dist, seed)))
    return value


def trial_seed(seed: int, k: int) -> str:
    return f"{seed}/{k}"


@dataclass
class UiidEstimate:
    trials: int
    mean_alg: Fraction
    mean_optc: Fraction
    ratio: Fraction
    lower: float
    half_width: float
    pathwise_ok: bool
    worst_path_ratio: Fraction | None
    rows: list[dict[str, Any]]

    @property
    def target(self) -> float:
        return ONE_MINUS_INV_E - 0.02


def estimate_ratio(dist: TypeDistribution, trials: int, seed: int = 0, z: float = Z_99) -> UiidEstimate:
    """Paired Monte Carlo estimate of ``E[ALG] / E[OPT^c]``.

    ``lower`` is a one-sided lower confidence bound from the delta method
    (``z = 2.326`` gives 99%).  ALG is cached per sequence and OPT^c per
    multiset of types, which it depends on only through.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    dist.ensure_dr()
    alg_cache: dict[tuple, Fraction] = {}
    optc_cache: dict[tuple, Fraction] = {}
    rows = []
    pathwise_ok = True
    worst = None
    for k in range(trials):
        seq = sample_path(dist, trial_seed(seed, k))
        alg = alg_cache.get(seq)
        if alg is None:
            _, alg, _ = run_greedy(realize(dist, seq))
            alg_cache[seq] = alg
        key = tuple(sorted(seq))
        optc = optc_cache.get(key)
        if optc is None:
            optc = solve_optc(realize(dist, key)).value
            optc_cache[key] = optc
        if 2 * alg < optc:
            pathwise_ok = False
        if optc:
            r = alg / optc
            worst = r if worst is None or r < worst else worst
        rows.append({"trial": k, "sequence": "".join(seq), "ALG": alg, "OPTC": optc})
    n = trials
    mean_a = sum((r["ALG"] for r in rows), ZERO) / n
    mean_c = sum((r["OPTC"] for r in rows), ZERO) / n
    if mean_c == 0:
        raise ValueError("E[OPT^c] is zero; the ratio is undefined")
    ratio = mean_a / mean_c
    half = _delta_half_width(rows, float(mean_a), float(mean_c), z)
    return UiidEstimate(n, mean_a, mean_c, ratio, float(ratio) - half, half, pathwise_ok, worst, rows)


def _delta_half_width(rows, ma: float, mc: float, z: float) -> float:
    n = len(rows)
    if n < 2:
        return math.inf
    a = [float(r["ALG"]) for r in rows]
    c = [float(r["OPTC"]) for r in rows]
    va = sum((x - ma) ** 2 for x in a) / (n - 1)
    vc = sum((y - mc) ** 2 for y in c) / (n - 1)
    cov = sum((x - ma) * (y - mc) for x, y in zip(a, c)) / (n - 1)
    r = ma / mc
    var = (va - 2 * r * cov + r * r * vc) / (mc * mc * n)
    return z * math.sqrt(max(var, 0.0))


# shipped fixtures ------------------------------------------------------------


def _sr(p) -> dict[str, Any]:
    return {"type": "independent", "p": p}


def uiid_obm() -> TypeDistribution:
    """Deterministic OBM: type ``a`` fits either resource, type ``b`` only resource 1."""
    types = (
        ArrivalType("a", (("a1", frozenset({1})), ("a2", frozenset({2})))),
        ArrivalType("b", (("b1", frozenset({1})),)),
    )
    objectives = {1: CountCoverage(1, ["a1", "b1"]), 2: CountCoverage(2, ["a2"])}
    return TypeDistribution("uiid-obm", (1, 2), types, (Fraction(1, 2), Fraction(1, 2)), 4, objectives)


def uiid_stochastic_rewards() -> TypeDistribution:
    """Stochastic rewards on three resources with success probabilities 1/2 and 1."""
    types = (
        ArrivalType(
            "a",
            (("a1", frozenset({1})), ("a2", frozenset({2}))),
            {"a1": _sr({1: "1/2"}), "a2": _sr({2: "1/2"})},
        ),
        ArrivalType("b", (("b2", frozenset({2})), ("b3", frozenset({3}))), {"b2": _sr({2: "1/2"})}),
        ArrivalType("c", (("c3", frozenset({3})),), {"c3": _sr({3: "1/2"})}),
    )
    objectives = {
        1: CountCoverage(1, ["a1"]),
        2: CountCoverage(2, ["a2", "b2"]),
        3: CountCoverage(3, ["b3", "c3"]),
    }
    weights = (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4))
    return TypeDistribution("uiid-sr", (1, 2, 3), types, weights, 4, objectives)


def uiid_adwords() -> TypeDistribution:
    """Budgeted allocation with click probabilities."""
    types = (
        ArrivalType(
            "a",
            (("a1", frozenset({1})), ("a2", frozenset({2}))),
            {"a1": _sr({1: "4/5"}), "a2": _sr({2: "1/2"})},
        ),
        ArrivalType("b", (("b1", frozenset({1})), ("b2", frozenset({2}))), {"b2": _sr({2: "9/10"})}),
    )
    objectives = {
        1: CountBudget(1, 3, {"a1": 2, "b1": 1}),
        2: CountBudget(2, 2, {"a2": 1, "b2": 2}),
    }
    return TypeDistribution("uiid-adwords", (1, 2), types, (Fraction(1, 3), Fraction(2, 3)), 4, objectives)


def uiid_assortment() -> TypeDistribution:
    """MNL customers choosing from assortments over two products."""

    def mnl(v0, v, S):
        den = Fraction(v0) + sum(Fraction(v[i]) for i in S)
        rows = [([i], Fraction(v[i]) / den) for i in sorted(S)]
        rows.append(([], 1 - sum(r[1] for r in rows)))
        return {"type": "joint", "table": rows}

    va, vb = {1: 2, 2: 1}, {1: 1, 2: 3}
    types = (
        ArrivalType(
            "a",
            (("a1", frozenset({1})), ("a2", frozenset({2})), ("a12", frozenset({1, 2}))),
            {"a1": mnl(1, va, [1]), "a2": mnl(1, va, [2]), "a12": mnl(1, va, [1, 2])},
        ),
        ArrivalType(
            "b",
            (("b2", frozenset({2})), ("b12", frozenset({1, 2}))),
            {"b2": mnl(2, vb, [2]), "b12": mnl(2, vb, [1, 2])},
        ),
    )
    objectives = {1: CountCoverage(1, ["a1", "a12", "b12"]), 2: CountCoverage(2, ["a2", "a12", "b2", "b12"])}
    return TypeDistribution("uiid-mnl", (1, 2), types, (Fraction(1, 2), Fraction(1, 2)), 4, objectives)


UIID_FIXTURES = {
    "uiid-obm": uiid_obm,
    "uiid-sr": uiid_stochastic_rewards,
    "uiid-adwords": uiid_adwords,
    "uiid-mnl": uiid_assortment,
}
