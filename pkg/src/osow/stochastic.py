"""Post-allocation stochasticity: activation tables, gamma, F_i and sampling.

A configuration ``(R, t)`` realizes an *active subset* ``A ⊆ R`` drawn from
a joint table.  Only the marginals ``p_{i,e}`` enter ``gamma`` and ``F_i``;
the joint table is used by sampling and by the adaptive benchmark.
Configurations without an entry are deterministic (``A = R`` surely).
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import product
from typing import Any, Iterable, Mapping, Sequence

from .model import ONE, ZERO, Configuration, InstanceError, as_value, ordered

ENUMERATION_CAP = 20

JointTable = tuple[tuple[frozenset, Fraction], ...]


class EnumerationCapError(ValueError):
    """Exact enumeration would exceed the configured cap."""


def independent_table(R: Iterable[int], marginals: Mapping[int, Any]) -> JointTable:
    """Product table for independent activation of each resource in ``R``."""
    rs = sorted(R)
    ps = {i: as_value(marginals.get(i, 1)) for i in rs}
    out: dict[frozenset, Fraction] = {}
    for bits in product((False, True), repeat=len(rs)):
        prob = ONE
        for i, on in zip(rs, bits):
            prob *= ps[i] if on else 1 - ps[i]
        if prob:
            A = frozenset(i for i, on in zip(rs, bits) if on)
            out[A] = out.get(A, ZERO) + prob
    return tuple(sorted(out.items(), key=lambda kv: (len(kv[0]), sorted(kv[0]))))


class ActivationModel:
    """Per-configuration joint distribution over active subsets.

    ``declared`` keeps how each entry was specified (``independent``
    marginals or an explicit ``joint`` table) so that serialization
    reproduces the original description.
    """

    def __init__(self, declared: Mapping[str, Mapping[str, Any]] | None = None):
        self.declared: dict[str, dict[str, Any]] = {}
        self._tables: dict[str, JointTable] = {}
        self._R: dict[str, frozenset] = {}
        for cid, spec in (declared or {}).items():
            self._declare(cid, dict(spec))
        self._p: dict[tuple[int, str], Fraction] = {}

    def _declare(self, cid: str, spec: dict[str, Any]) -> None:
        kind = spec.get("type")
        if kind == "independent":
            marg = {int(i): as_value(p) for i, p in spec["p"].items()}
            for i, p in marg.items():
                if not 0 <= p <= 1:
                    raise InstanceError(f"{cid}: probability {p} of resource {i} outside [0, 1]")
            self.declared[cid] = {"type": "independent", "p": marg}
        elif kind == "joint":
            rows: dict[frozenset, Fraction] = {}
            for A, prob in spec["table"]:
                A = frozenset(int(i) for i in A)
                if A in rows:
                    raise InstanceError(f"{cid}: active subset {sorted(A)} listed twice")
                rows[A] = as_value(prob)
            if any(v < 0 for v in rows.values()):
                raise InstanceError(f"{cid}: negative probability in joint table")
            total = sum(rows.values(), ZERO)
            if total != 1:
                raise InstanceError(f"{cid}: joint table sums to {total}, not 1")
            self.declared[cid] = {"type": "joint", "table": rows}
        else:
            raise InstanceError(f"{cid}: unknown activation type {kind!r}")

    @classmethod
    def independent(cls, marginals: Mapping[str, Mapping[int, Any]]) -> ActivationModel:
        return cls({cid: {"type": "independent", "p": dict(p)} for cid, p in marginals.items()})

    @classmethod
    def joint(cls, tables: Mapping[str, Iterable[tuple[Iterable[int], Any]]]) -> ActivationModel:
        return cls({cid: {"type": "joint", "table": list(rows)} for cid, rows in tables.items()})

    def validate(self, configs: Sequence[Configuration]) -> None:
        by_id = {e.id: e for e in configs}
        for cid, spec in self.declared.items():
            e = by_id.get(cid)
            if e is None:
                raise InstanceError(f"activation given for unknown configuration {cid!r}")
            if spec["type"] == "independent":
                extra = set(spec["p"]) - set(e.R)
                if extra:
                    raise InstanceError(f"{cid}: marginals for resources {sorted(extra)} outside R")
                self._tables[cid] = independent_table(e.R, spec["p"])
            else:
                for A in spec["table"]:
                    if not A <= e.R:
                        raise InstanceError(f"{cid}: active subset {sorted(A)} not contained in R")
                self._tables[cid] = tuple(
                    sorted(spec["table"].items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))
                )
        for e in configs:
            self._R[e.id] = e.R

    def table(self, e: Configuration) -> JointTable:
        tab = self._tables.get(e.id)
        if tab is None:
            if e.id in self.declared:
                self.validate([e])
                return self._tables[e.id]
            return ((frozenset(e.R), ONE),)
        return tab

    def p(self, i: int, e: Configuration) -> Fraction:
        """Marginal probability that resource ``i`` is active in ``e``."""
        if i not in e.R:
            return ZERO
        key = (i, e.id)
        v = self._p.get(key)
        if v is None:
            v = sum((prob for A, prob in self.table(e) if i in A), ZERO)
            self._p[key] = v
        return v

    def is_declared(self, e: Configuration) -> bool:
        return e.id in self.declared


def _check_pairs(S: Iterable[Configuration], i: int, strict: bool) -> None:
    seen = set()
    for e in S:
        if i not in e.R:
            raise InstanceError(f"{e.id} does not belong to N_{i}")
        if strict and e.t in seen:
            raise InstanceError(f"set is not subfeasible at arrival {e.t}")
        seen.add(e.t)


def gamma(
    X: Iterable[Configuration],
    S: Iterable[Configuration],
    i: int,
    model: ActivationModel,
    strict: bool = True,
) -> Fraction:
    """Probability that ``i`` is active exactly in ``X`` among ``S``."""
    X, S = frozenset(X), frozenset(S)
    if not X <= S:
        raise InstanceError("X must be a subset of S")
    _check_pairs(S, i, strict)
    out = ONE
    for e in S:
        p = model.p(i, e)
        out *= p if e in X else 1 - p
    return out


def _split(Si: frozenset, i: int, model: ActivationModel):
    sure, unsure = [], []
    for e in ordered(Si):
        p = model.p(i, e)
        if p == 1:
            sure.append(e)
        elif p != 0:
            unsure.append((e, p))
    return frozenset(sure), unsure


def _activation_worlds(Si: frozenset, i: int, model: ActivationModel, cap: int):
    """Yield ``(X, gamma(X, Si))`` skipping zero-probability worlds."""
    sure, unsure = _split(Si, i, model)
    if len(unsure) > cap:
        raise EnumerationCapError(f"{len(unsure)} uncertain elements exceed the enumeration cap {cap}")
    for bits in product((False, True), repeat=len(unsure)):
        prob = ONE
        X = set(sure)
        for (e, p), on in zip(unsure, bits):
            if on:
                prob *= p
                X.add(e)
            else:
                prob *= 1 - p
        yield frozenset(X), prob


def expected_value(oracle, S: Iterable[Configuration], model: ActivationModel, cap: int = ENUMERATION_CAP) -> Fraction:
    """``F_i(S) = sum_{X ⊆ S_i} gamma(X, S_i) f_i(X)`` by exact enumeration.

    Worlds with probability zero are skipped and certain elements are not
    branched on, so the enumeration cap counts only uncertain elements.
    """
    i = oracle.owner
    Si = frozenset(e for e in S if i in e.R)
    if len(Si) > cap:
        raise EnumerationCapError(f"|S ∩ N_{i}| = {len(Si)} exceeds the enumeration cap {cap}")
    if getattr(oracle, "domain", "full") == "subfeasible":
        _check_pairs(Si, i, strict=True)
    return sum((prob * oracle(X) for X, prob in _activation_worlds(Si, i, model, cap)), ZERO)


def expected_marginal(
    oracle, e: Configuration, S: Iterable[Configuration], model: ActivationModel, cap: int = ENUMERATION_CAP
) -> Fraction:
    """``F_i(e | S) = p_e * sum_{X ⊆ S_i} gamma(X, S_i) f_i(e | X)``."""
    i = oracle.owner
    S = frozenset(S)
    if e in S:
        raise ValueError(f"{e.id} already belongs to the conditioning set")
    if i not in e.R:
        return ZERO
    p = model.p(i, e)
    if p == 0:
        return ZERO
    Si = frozenset(x for x in S if i in x.R)
    if getattr(oracle, "domain", "full") == "subfeasible":
        _check_pairs(Si | {e}, i, strict=True)
    total = ZERO
    for X, prob in _activation_worlds(Si, i, model, cap):
        total += prob * (oracle(X | {e}) - oracle(X))
    return p * total


def sample_outcome(e: Configuration, model: ActivationModel, rng: random.Random) -> frozenset:
    """Draw the active subset of ``e`` from its joint table."""
    u = Fraction(rng.random())
    acc = ZERO
    table = model.table(e)
    for A, prob in table:
        acc += prob
        if u < acc:
            return A
    raise InstanceError(f"{e.id}: joint table does not sum to 1")
