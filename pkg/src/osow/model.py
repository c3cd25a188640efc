"""Instance data model shared by every other module.

Resources, arrivals, configurations ``(R, t)``, allocations and the
``Instance`` container.  All numbers are exact :class:`fractions.Fraction`.
An element set is a ``frozenset`` of :class:`Configuration`; use
:func:`ordered` for the canonical arrival-consistent iteration order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Any, Iterable, Mapping, Sequence

if TYPE_CHECKING:  # pragma: no cover
    from .objectives import ValueOracle
    from .stochastic import ActivationModel

Value = Fraction
ZERO = Fraction(0)
ONE = Fraction(1)


class InstanceError(ValueError):
    """Raised when an instance description violates a model invariant."""


def as_value(x: Any) -> Fraction:
    """Exact conversion; floats are rejected to keep everything rational."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise InstanceError(f"not a number: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InstanceError(f"not an exact rational: {x!r}") from exc
    if isinstance(x, float):
        raise InstanceError(f"floats are not accepted, pass a decimal string: {x!r}")
    try:
        return Fraction(x)
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"not a number: {x!r}") from exc


@dataclass(frozen=True, order=True)
class Resource:
    index: int
    dummy: bool = False


@dataclass(frozen=True)
class Arrival:
    t: int
    time: Fraction | None = None
    type_label: str | None = None


@dataclass(frozen=True)
class Configuration:
    """A combinatorial action at arrival ``t`` engaging resource set ``R``."""

    id: str
    t: int
    R: frozenset

    def __hash__(self) -> int:
        return hash((self.t, self.id))

    @property
    def key(self) -> tuple[int, str]:
        return (self.t, self.id)

    def __repr__(self) -> str:
        return f"<{self.id}@t{self.t} R={sorted(self.R)}>"


def ordered(S: Iterable[Configuration]) -> tuple[Configuration, ...]:
    """Arrival-consistent order: by arrival index, ties by configuration id."""
    return tuple(sorted(S, key=lambda e: (e.t, e.id)))


def is_subfeasible(S: Iterable[Configuration], inst: Instance | None = None) -> bool:
    """True iff ``S`` holds at most one configuration per arrival."""
    seen: set[int] = set()
    for e in S:
        if inst is not None and inst.by_id.get(e.id) != e:
            raise InstanceError(f"{e.id} is not a configuration of {inst.name}")
        if e.t in seen:
            return False
        seen.add(e.t)
    return True


def restrict(S: Iterable[Configuration], i: int | Resource) -> frozenset:
    """``S ∩ N_i``."""
    idx = i.index if isinstance(i, Resource) else i
    return frozenset(e for e in S if idx in e.R)


@dataclass(frozen=True)
class Allocation:
    """Partial map from arrival index to the chosen configuration."""

    choice: Mapping[int, Configuration] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for t, e in self.choice.items():
            if e.t != t:
                raise InstanceError(f"configuration {e.id} belongs to arrival {e.t}, not {t}")

    @property
    def elements(self) -> frozenset:
        return frozenset(self.choice.values())

    def ids(self) -> dict[int, str]:
        return {t: e.id for t, e in sorted(self.choice.items())}

    @classmethod
    def from_elements(cls, S: Iterable[Configuration]) -> Allocation:
        choice: dict[int, Configuration] = {}
        for e in S:
            if e.t in choice:
                raise InstanceError(f"two configurations at arrival {e.t}")
            choice[e.t] = e
        return cls(dict(sorted(choice.items())))


class Instance:
    """Validated, immutable problem instance.

    Use :func:`build_instance` to construct one.  Derived indexes (``N``,
    ``N_i`` per resource, configuration lookup by id) are computed once.
    ``F(i, S)`` memoizes the expected value function of resource ``i``.
    """

    def __init__(
        self,
        name: str,
        resources: tuple[Resource, ...],
        arrivals: tuple[Arrival, ...],
        menus: dict[int, tuple[Configuration, ...]],
        activation: ActivationModel,
        objectives: dict[int, ValueOracle],
        arrival_model: Mapping[str, Any],
        family: str,
        meta: Mapping[str, Any],
    ):
        self.name = name
        self.resources = resources
        self.arrivals = arrivals
        self.menus = menus
        self.activation = activation
        self.objectives = objectives
        self.arrival_model = dict(arrival_model)
        self.family = family
        self.meta = dict(meta)
        self.N: tuple[Configuration, ...] = tuple(e for t in sorted(menus) for e in menus[t])
        self.by_id = {e.id: e for e in self.N}
        self._N_i = {
            r.index: frozenset(e for e in self.N if r.index in e.R) for r in resources
        }
        self._F_cache: dict[tuple[int, frozenset], Fraction] = {}

    @property
    def T(self) -> int:
        return len(self.arrivals)

    @property
    def real_resources(self) -> tuple[int, ...]:
        return tuple(r.index for r in self.resources if not r.dummy)

    @property
    def dummy_resources(self) -> tuple[int, ...]:
        return tuple(r.index for r in self.resources if r.dummy)

    def N_of(self, i: int) -> frozenset:
        return self._N_i[i]

    def menu(self, t: int) -> tuple[Configuration, ...]:
        return self.menus.get(t, ())

    def time(self, t: int) -> Fraction | None:
        return self.arrivals[t - 1].time

    def F(self, i: int, S: Iterable[Configuration]) -> Fraction:
        """Expected value ``F_i(S)``; zero for dummy resources."""
        oracle = self.objectives.get(i)
        if oracle is None:
            return ZERO
        Si = frozenset(e for e in S if i in e.R)
        key = (i, Si)
        v = self._F_cache.get(key)
        if v is None:
            from .stochastic import expected_value

            v = expected_value(oracle, Si, self.activation)
            self._F_cache[key] = v
        return v

    def total(self, S: Iterable[Configuration]) -> Fraction:
        S = frozenset(S)
        return sum((self.F(i, S) for i in self.objectives), ZERO)

    def marginal_total(self, e: Configuration, S: frozenset) -> Fraction:
        """``sum_i F_i(e | S)``; only resources in ``e.R`` can gain."""
        Se = S | {e}
        return sum((self.F(i, Se) - self.F(i, S) for i in e.R if i in self.objectives), ZERO)

    def allocations_count(self) -> int:
        n = 1
        for a in self.arrivals:
            n *= len(self.menu(a.t)) + 1
        return n

    def is_deterministic(self) -> bool:
        return all(
            self.activation.p(i, e) == 1 for e in self.N for i in e.R if i in self.objectives
        )

    def __repr__(self) -> str:
        return (
            f"Instance({self.name!r}, |I|={len(self.real_resources)}, T={self.T}, "
            f"|N|={len(self.N)}, family={self.family!r})"
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        from .io import instance_to_dict

        return instance_to_dict(self) == instance_to_dict(other)

    __hash__ = object.__hash__


def build_instance(
    *,
    resources: Sequence[Resource | int],
    arrivals: Sequence[Arrival] | int,
    configurations: Iterable[Configuration],
    objectives: Mapping[int, ValueOracle],
    activation: ActivationModel | None = None,
    name: str = "instance",
    family: str = "custom",
    arrival_model: Mapping[str, Any] | None = None,
    meta: Mapping[str, Any] | None = None,
) -> Instance:
    """Validate the pieces and assemble an :class:`Instance`."""
    from .stochastic import ActivationModel

    res = tuple(r if isinstance(r, Resource) else Resource(int(r)) for r in resources)
    idx = [r.index for r in res]
    if len(set(idx)) != len(idx):
        raise InstanceError(f"duplicate resource indices in {idx}")
    known = set(idx)
    dummies = {r.index for r in res if r.dummy}

    if isinstance(arrivals, int):
        arrivals = [Arrival(t) for t in range(1, arrivals + 1)]
    arrs = tuple(arrivals)
    for k, a in enumerate(arrs, start=1):
        if a.t != k:
            raise InstanceError(f"arrivals must be numbered 1..T in order, got t={a.t} at position {k}")
        if a.time is not None and a.time < 0:
            raise InstanceError(f"arrival {a.t} has negative time")
    times = [a.time for a in arrs]
    if any(x is not None for x in times):
        if any(x is None for x in times):
            raise InstanceError("arrival times must be given for all arrivals or none")
        for prev, cur in zip(times, times[1:]):
            if not cur > prev:
                raise InstanceError(f"arrival times must be strictly increasing ({prev} then {cur})")

    menus: dict[int, list[Configuration]] = {a.t: [] for a in arrs}
    seen_ids: set[str] = set()
    for e in configurations:
        if e.id in seen_ids:
            raise InstanceError(f"duplicate configuration id {e.id!r}")
        seen_ids.add(e.id)
        if not e.R:
            raise InstanceError(f"configuration {e.id!r} has an empty resource set")
        unknown = set(e.R) - known
        if unknown:
            raise InstanceError(f"configuration {e.id!r} references unknown resources {sorted(unknown)}")
        if e.t not in menus:
            raise InstanceError(f"configuration {e.id!r} references unknown arrival {e.t}")
        menus[e.t].append(e)
    frozen_menus = {t: tuple(sorted(m, key=lambda e: e.id)) for t, m in menus.items()}
    for t, m in frozen_menus.items():
        rsets = [e.R for e in m]
        if len(set(rsets)) != len(rsets):
            raise InstanceError(f"arrival {t} has two configurations with the same resource set")

    objs = dict(objectives)
    for i, oracle in objs.items():
        if i not in known:
            raise InstanceError(f"objective for unknown resource {i}")
        if i in dummies:
            raise InstanceError(f"dummy resource {i} cannot carry an objective")
        if oracle.owner != i:
            raise InstanceError(f"objective keyed {i} is owned by resource {oracle.owner}")
    missing = known - dummies - set(objs)
    if missing:
        raise InstanceError(f"no objective for resources {sorted(missing)}")

    if activation is None:
        activation = ActivationModel({})
    all_configs = [e for t in sorted(frozen_menus) for e in frozen_menus[t]]
    activation.validate(all_configs)
    for oracle in objs.values():
        oracle.validate_against(all_configs, arrs)

    return Instance(
        name=name,
        resources=res,
        arrivals=arrs,
        menus=frozen_menus,
        activation=activation,
        objectives=objs,
        arrival_model=arrival_model or {"kind": "adversarial"},
        family=family,
        meta=meta or {},
    )
