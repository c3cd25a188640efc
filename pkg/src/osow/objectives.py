"""Monotone set-function oracles ``f_i`` owned by one resource.

Every oracle evaluates ``f_i(S) = f_i(S ∩ N_i)``.  Oracles with
``domain == "subfeasible"`` refuse sets holding two of the owner's
configurations at the same arrival.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Any, Iterable, Mapping, Sequence

from .model import ZERO, Arrival, Configuration, InstanceError, as_value, ordered


class OracleDomainError(ValueError):
    """An oracle was asked about a set outside its domain."""


def _subfeasible_ids(Si: Iterable[Configuration]) -> bool:
    seen = set()
    for e in Si:
        if e.t in seen:
            return False
        seen.add(e.t)
    return True


class ValueOracle:
    """Base class.  Subclasses implement ``_evaluate`` on ``S ∩ N_i``."""

    family = "abstract"
    domain = "full"

    def __init__(self, owner: int):
        self.owner = owner
        self._memo: dict[frozenset, Fraction] = {}

    def restrict(self, S: Iterable[Configuration]) -> frozenset:
        return frozenset(e for e in S if self.owner in e.R)

    def in_domain(self, S: Iterable[Configuration]) -> bool:
        return self.domain == "full" or _subfeasible_ids(self.restrict(S))

    def __call__(self, S: Iterable[Configuration]) -> Fraction:
        Si = self.restrict(S)
        v = self._memo.get(Si)
        if v is None:
            if self.domain == "subfeasible" and not _subfeasible_ids(Si):
                raise OracleDomainError(
                    f"{self.family} oracle of resource {self.owner} is defined on "
                    f"subfeasible sets only; got {ordered(Si)}"
                )
            v = self._evaluate(Si)
            self._memo[Si] = v
        return v

    value = __call__

    def marginal(self, e: Configuration, S: Iterable[Configuration]) -> Fraction:
        return marginal(self, e, S)

    def _evaluate(self, Si: frozenset) -> Fraction:  # pragma: no cover
        raise NotImplementedError

    def descriptor(self) -> dict[str, Any]:
        """JSON-compatible description used by the instance file format."""
        raise NotImplementedError

    def validate_against(self, configs: Sequence[Configuration], arrivals: Sequence[Arrival]) -> None:
        """Hook for build-time checks that need the whole instance."""

    def __repr__(self) -> str:
        return f"{type(self).__name__}(owner={self.owner})"


def marginal(oracle, e: Configuration, S: Iterable[Configuration]) -> Fraction:
    """``f(e | S) = f(S ∪ e) - f(S)``."""
    S = frozenset(S)
    if e in S:
        raise ValueError(f"{e.id} already belongs to the conditioning set")
    return oracle(S | {e}) - oracle(S)


class ZeroOracle(ValueOracle):
    family = "zero"

    def _evaluate(self, Si):
        return ZERO

    def descriptor(self):
        return {"family": "zero"}


class CoverageOracle(ValueOracle):
    """``min{1, |S ∩ N_i|}``: unit reward once the resource is used at all."""

    family = "coverage"

    def _evaluate(self, Si):
        return Fraction(min(1, len(Si)))

    def descriptor(self):
        return {"family": "coverage"}


def coverage_oracle(i: int) -> CoverageOracle:
    return CoverageOracle(i)


class BudgetAdditiveOracle(ValueOracle):
    """``min{B_i, sum of bids over S ∩ N_i}``."""

    family = "budget_additive"

    def __init__(self, owner: int, budget, bids: Mapping[str, Any]):
        super().__init__(owner)
        self.budget = as_value(budget)
        self.bids = {k: as_value(v) for k, v in bids.items()}
        if self.budget < 0 or any(b < 0 for b in self.bids.values()):
            raise InstanceError("budget and bids must be nonnegative")

    def _evaluate(self, Si):
        try:
            total = sum((self.bids[e.id] for e in Si), ZERO)
        except KeyError as exc:
            raise InstanceError(f"no bid for configuration {exc.args[0]!r}") from None
        return min(self.budget, total)

    def descriptor(self):
        return {
            "family": "budget_additive",
            "budget": str(self.budget),
            "bids": {k: str(v) for k, v in sorted(self.bids.items())},
        }

    def validate_against(self, configs, arrivals):
        _check_keys(self, self.bids, configs)


def budget_additive_oracle(i: int, budget, bids: Mapping[str, Any]) -> BudgetAdditiveOracle:
    return BudgetAdditiveOracle(i, budget, bids)


class WeightedConfigOracle(ValueOracle):
    """Reward ``w_{i,S,t}`` per chosen configuration.

    Without a capacity the rewards add up.  With free disposal and capacity
    ``c_i`` only the ``c_i`` largest weights in ``S ∩ N_i`` count.
    """

    family = "weighted"

    def __init__(self, owner: int, weights: Mapping[str, Any], capacity: int | None = None):
        super().__init__(owner)
        self.weights = {k: as_value(v) for k, v in weights.items()}
        if any(w < 0 for w in self.weights.values()):
            raise InstanceError("weights must be nonnegative")
        if capacity is not None and capacity < 0:
            raise InstanceError("capacity must be nonnegative")
        self.capacity = capacity

    def _evaluate(self, Si):
        try:
            ws = sorted((self.weights[e.id] for e in Si), reverse=True)
        except KeyError as exc:
            raise InstanceError(f"unknown configuration key {exc.args[0]!r}") from None
        if self.capacity is not None:
            ws = ws[: self.capacity]
        return sum(ws, ZERO)

    def descriptor(self):
        d: dict[str, Any] = {
            "family": "weighted",
            "weights": {k: str(v) for k, v in sorted(self.weights.items())},
        }
        if self.capacity is not None:
            d["capacity"] = self.capacity
        return d

    def validate_against(self, configs, arrivals):
        _check_keys(self, self.weights, configs)


def weighted_config_oracle(i: int, weights: Mapping[str, Any], capacity: int | None = None):
    return WeightedConfigOracle(i, weights, capacity)


def _check_keys(oracle: ValueOracle, keyed: Mapping[str, Any], configs) -> None:
    mine = {e.id for e in configs if oracle.owner in e.R}
    extra = set(keyed) - mine
    if extra:
        raise InstanceError(
            f"resource {oracle.owner}: keys {sorted(extra)} are not configurations containing it"
        )
    missing = mine - set(keyed)
    if missing:
        raise InstanceError(f"resource {oracle.owner}: no entry for configurations {sorted(missing)}")


def all_subsets(ground: Sequence[Configuration], subfeasible_only: bool = False):
    """Yield frozensets of ``ground`` by increasing size, lexicographic in canonical order."""
    elems = ordered(ground)
    for k in range(len(elems) + 1):
        for combo in combinations(elems, k):
            if subfeasible_only and not _subfeasible_ids(combo):
                continue
            yield frozenset(combo)


class TableOracle(ValueOracle):
    """Explicit lookup table over subsets of ``N_i`` (keyed by configuration ids)."""

    family = "table"

    def __init__(
        self,
        owner: int,
        ground: Iterable[Configuration],
        table: Mapping[Any, Any],
        domain: str = "full",
    ):
        super().__init__(owner)
        if domain not in ("full", "subfeasible"):
            raise InstanceError(f"unknown domain {domain!r}")
        self.domain = domain
        self.ground = ordered(ground)
        self._ids = {e.id for e in self.ground}
        tab: dict[frozenset, Fraction] = {}
        for k, v in table.items():
            key = frozenset(e.id if isinstance(e, Configuration) else e for e in k)
            tab[key] = as_value(v)
        self.table = tab
        self._check()

    def _check(self) -> None:
        sub = self.domain == "subfeasible"
        needed = [frozenset(e.id for e in X) for X in all_subsets(self.ground, sub)]
        for key in needed:
            if key not in self.table:
                raise InstanceError(f"table for resource {self.owner} misses subset {sorted(key)}")
        extra = set(self.table) - set(needed)
        if extra:
            raise InstanceError(f"table for resource {self.owner} has keys outside its domain: {extra}")
        if self.table[frozenset()] != 0:
            raise InstanceError("table value of the empty set must be 0")
        if any(v < 0 for v in self.table.values()):
            raise InstanceError("table values must be nonnegative")
        by_t = {e.id: e.t for e in self.ground}
        for key, v in self.table.items():
            ts = {by_t[x] for x in key}
            for x in self._ids - key:
                if sub and by_t[x] in ts:
                    continue
                bigger = self.table[key | {x}]
                if bigger < v:
                    raise InstanceError(
                        f"table for resource {self.owner} is not monotone: "
                        f"f({sorted(key)})={v} > f({sorted(key | {x})})={bigger}"
                    )

    def _evaluate(self, Si):
        key = frozenset(e.id for e in Si)
        try:
            return self.table[key]
        except KeyError:
            raise OracleDomainError(f"table of resource {self.owner} has no entry for {sorted(key)}") from None

    def descriptor(self):
        rows = sorted(self.table.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))
        d: dict[str, Any] = {
            "family": "table",
            "table": [[sorted(k), str(v)] for k, v in rows],
        }
        if self.domain != "full":
            d["domain"] = self.domain
        return d

    def validate_against(self, configs, arrivals):
        mine = {e.id for e in configs if self.owner in e.R}
        if mine != self._ids:
            raise InstanceError(
                f"table for resource {self.owner} covers {sorted(self._ids)} but N_i is {sorted(mine)}"
            )


def explicit_table_oracle(i: int, ground, table, domain: str = "full") -> TableOracle:
    return TableOracle(i, ground, table, domain)


def matching_process(
    S: Iterable[Configuration], duration, times: Mapping[int, Fraction]
) -> tuple[int, tuple[Configuration, ...]]:
    """Scan ``S`` in arrival order, renting the resource whenever it is free.

    A match at time ``a`` occupies ``[a, a + duration)``.  Returns the
    number of matches and the matched elements.
    """
    d = as_value(duration)
    matched: list[Configuration] = []
    busy_until: Fraction | None = None
    for e in ordered(S):
        try:
            a = times[e.t]
        except KeyError:
            raise InstanceError(f"no arrival time for arrival {e.t}") from None
        if a is None:
            raise InstanceError(f"no arrival time for arrival {e.t}")
        if busy_until is None or a >= busy_until:
            matched.append(e)
            busy_until = a + d
    return len(matched), tuple(matched)


class ReusableOracle(ValueOracle):
    """``r_i(S)``: number of matches of the matching process on ``S ∩ N_i``."""

    family = "reusable"
    domain = "subfeasible"

    def __init__(self, owner: int, duration, times: Mapping[int, Any]):
        super().__init__(owner)
        self.duration = as_value(duration)
        if self.duration <= 0:
            raise InstanceError("usage duration must be positive")
        self.times = {int(t): (None if a is None else as_value(a)) for t, a in times.items()}

    def _evaluate(self, Si):
        return Fraction(matching_process(Si, self.duration, self.times)[0])

    def descriptor(self):
        return {"family": "reusable", "duration": str(self.duration)}

    def validate_against(self, configs, arrivals):
        for a in arrivals:
            if a.time is None:
                raise InstanceError("reusable objectives need arrival times")
            if self.times.get(a.t) != a.time:
                raise InstanceError(f"reusable oracle of resource {self.owner} disagrees on a({a.t})")


def reusable_oracle(i: int, duration, times: Mapping[int, Any]) -> ReusableOracle:
    return ReusableOracle(i, duration, times)


class SumOracle(ValueOracle):
    """Nonnegative weighted sum of oracles sharing one owner."""

    family = "sum"

    def __init__(self, parts: Sequence[tuple[Any, ValueOracle]]):
        if not parts:
            raise InstanceError("sum oracle needs at least one part")
        owners = {o.owner for _, o in parts}
        if len(owners) != 1:
            raise InstanceError(f"sum oracle parts have mixed owners {sorted(owners)}")
        super().__init__(owners.pop())
        self.parts = [(as_value(lam), o) for lam, o in parts]
        if any(lam < 0 for lam, _ in self.parts):
            raise InstanceError("sum oracle weights must be nonnegative")
        self.domain = "subfeasible" if any(o.domain == "subfeasible" for _, o in self.parts) else "full"

    def _evaluate(self, Si):
        return sum((lam * o(Si) for lam, o in self.parts if lam), ZERO)

    def descriptor(self):
        return {"family": "sum", "parts": [[str(lam), o.descriptor()] for lam, o in self.parts]}

    def validate_against(self, configs, arrivals):
        for _, o in self.parts:
            o.validate_against(configs, arrivals)


def sum_oracle(parts: Sequence[tuple[Any, ValueOracle]]) -> SumOracle:
    return SumOracle(parts)
