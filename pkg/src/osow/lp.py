"""Exact rational linear programs and a primal simplex solver.

All variables are nonnegative.  The solver is a dense-tableau, two-phase
primal simplex with Bland's rule, run on ``gmpy2.mpq`` internally and
returning :class:`fractions.Fraction` values.  Phase one is skipped for
rows that already own a slack or a unit column, which covers the
concave-closure programs built in :mod:`osow.benchmarks`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping

from gmpy2 import mpq

from .model import as_value

SENSES = ("<=", "=", ">=")


class LPError(ValueError):
    pass


class InfeasibleLP(LPError):
    pass


class UnboundedLP(LPError):
    pass


@dataclass
class Constraint:
    coeffs: dict[str, Fraction]
    sense: str
    rhs: Fraction
    name: str = ""


@dataclass
class LinearProgram:
    """``max`` or ``min`` of a linear objective over nonnegative variables."""

    sense: str = "max"
    variables: list[str] = field(default_factory=list)
    objective: dict[str, Fraction] = field(default_factory=dict)
    upper: dict[str, Fraction] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)
    tags: dict[str, Any] = field(default_factory=dict)

    def add_variable(self, name: str, obj: Any = 0, upper: Any = None, tag: Any = None) -> str:
        if name in self.objective:
            raise LPError(f"duplicate variable {name!r}")
        self.variables.append(name)
        self.objective[name] = as_value(obj)
        if upper is not None:
            self.upper[name] = as_value(upper)
        if tag is not None:
            self.tags[name] = tag
        return name

    def add_constraint(self, coeffs: Mapping[str, Any], sense: str, rhs: Any, name: str = "") -> None:
        if sense not in SENSES:
            raise LPError(f"unknown constraint sense {sense!r}")
        cs = {}
        for v, c in coeffs.items():
            if v not in self.objective:
                raise LPError(f"constraint {name!r} uses unknown variable {v!r}")
            c = as_value(c)
            if c:
                cs[v] = c
        self.constraints.append(Constraint(cs, sense, as_value(rhs), name))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.constraints) + len(self.upper), len(self.variables)

    def evaluate(self, assignment: Mapping[str, Any]) -> Fraction:
        return sum((c * as_value(assignment.get(v, 0)) for v, c in self.objective.items()), Fraction(0))

    def is_feasible(self, assignment: Mapping[str, Any]) -> bool:
        x = {v: as_value(assignment.get(v, 0)) for v in self.variables}
        if any(val < 0 for val in x.values()):
            return False
        if any(x[v] > u for v, u in self.upper.items()):
            return False
        for con in self.constraints:
            lhs = sum((c * x[v] for v, c in con.coeffs.items()), Fraction(0))
            if con.sense == "<=" and lhs > con.rhs:
                return False
            if con.sense == ">=" and lhs < con.rhs:
                return False
            if con.sense == "=" and lhs != con.rhs:
                return False
        return True

    def dump(self) -> str:
        """Text form: one constraint per line, coefficients written ``p/q``."""

        def term(c: Fraction, v: str) -> str:
            return f"{_pq(c)} {v}"

        lines = [f"{self.sense}: " + " + ".join(term(c, v) for v, c in self.objective.items() if c)]
        for k, con in enumerate(self.constraints):
            label = con.name or f"c{k}"
            lhs = " + ".join(term(c, v) for v, c in con.coeffs.items()) or "0"
            lines.append(f"{label}: {lhs} {con.sense} {_pq(con.rhs)}")
        for v, u in self.upper.items():
            lines.append(f"bound: {v} <= {_pq(u)}")
        return "\n".join(lines) + "\n"


def _pq(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass
class LPSolution:
    value: Fraction
    assignment: dict[str, Fraction]
    basis: tuple[str, ...]
    pivots: int


def _to_fraction(x: mpq) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


class _Tableau:
    def __init__(self, rows, rhs, basis, ncols):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.ncols = ncols
        self.pivots = 0

    def pivot(self, r: int, j: int) -> None:
        row = self.rows[r]
        piv = row[j]
        if piv != 1:
            inv = 1 / piv
            for k in range(self.ncols):
                if row[k]:
                    row[k] *= inv
            self.rhs[r] *= inv
        nz = [k for k in range(self.ncols) if row[k]]
        b = self.rhs[r]
        for rr, other in enumerate(self.rows):
            if rr == r:
                continue
            f = other[j]
            if f:
                for k in nz:
                    other[k] -= f * row[k]
                self.rhs[rr] -= f * b
        self.basis[r] = j
        self.pivots += 1

    def reduced_costs(self, cost):
        z = list(cost)
        zval = mpq(0)
        for r, j in enumerate(self.basis):
            cb = cost[j]
            if cb:
                row = self.rows[r]
                for k in range(self.ncols):
                    if row[k]:
                        z[k] -= cb * row[k]
                zval += cb * self.rhs[r]
        return z, zval

    def optimize(self, cost, allowed):
        """Maximize ``cost`` with Bland's rule over columns in ``allowed``."""
        z, zval = self.reduced_costs(cost)
        while True:
            j = next((k for k in allowed if z[k] > 0), None)
            if j is None:
                return zval
            best = None
            for r, row in enumerate(self.rows):
                a = row[j]
                if a > 0:
                    ratio = self.rhs[r] / a
                    key = (ratio, self.basis[r])
                    if best is None or key < best[0]:
                        best = (key, r)
            if best is None:
                raise UnboundedLP(f"objective unbounded along column {j}")
            r = best[1]
            self.pivot(r, j)
            row = self.rows[r]
            f = z[j]
            for k in range(self.ncols):
                if row[k]:
                    z[k] -= f * row[k]
            zval += f * self.rhs[r]


def simplex_solve(lp: LinearProgram) -> LPSolution:
    """Exact optimum of ``lp`` and a basic optimal assignment."""
    names = list(lp.variables)
    n = len(names)
    col = {v: k for k, v in enumerate(names)}
    sign = 1 if lp.sense == "max" else -1
    if lp.sense not in ("max", "min"):
        raise LPError(f"unknown objective sense {lp.sense!r}")

    raw = [(dict(c.coeffs), c.sense, c.rhs) for c in lp.constraints]
    raw += [({v: Fraction(1)}, "<=", u) for v, u in lp.upper.items()]

    rows_c: list[dict[int, mpq]] = []
    senses: list[str] = []
    rhs: list[mpq] = []
    for coeffs, sense, b in raw:
        d = {col[v]: mpq(c.numerator, c.denominator) for v, c in coeffs.items()}
        b = mpq(b.numerator, b.denominator)
        if b < 0:
            d = {k: -c for k, c in d.items()}
            b = -b
            sense = {"<=": ">=", ">=": "<=", "=": "="}[sense]
        rows_c.append(d)
        senses.append(sense)
        rhs.append(b)
    m = len(rows_c)

    # extra columns: slack / surplus per inequality, then artificials
    extra = []
    for r, s in enumerate(senses):
        if s == "<=":
            extra.append((r, mpq(1)))
        elif s == ">=":
            extra.append((r, mpq(-1)))
    n_struct = n + len(extra)

    col_rows: dict[int, list[int]] = {}
    for r, d in enumerate(rows_c):
        for k in d:
            col_rows.setdefault(k, []).append(r)

    basis: list[int | None] = [None] * m
    for k, (r, c) in enumerate(extra):
        if c > 0:
            basis[r] = n + k
    used = set()
    for r in range(m):
        if basis[r] is not None:
            continue
        for k, d in ((k, rows_c[r][k]) for k in sorted(rows_c[r])):
            if k not in used and d > 0 and col_rows.get(k) == [r]:
                basis[r] = k
                used.add(k)
                break
    artificial_rows = [r for r in range(m) if basis[r] is None]
    ncols = n_struct + len(artificial_rows)

    rows = []
    for r, d in enumerate(rows_c):
        row = [mpq(0)] * ncols
        for k, c in d.items():
            row[k] = c
        rows.append(row)
    for k, (r, c) in enumerate(extra):
        rows[r][n + k] = c
    for a, r in enumerate(artificial_rows):
        rows[r][n_struct + a] = mpq(1)
        basis[r] = n_struct + a
    tab = _Tableau(rows, rhs, basis, ncols)
    for r in range(m):
        j = basis[r]
        if rows[r][j] != 1:
            # unit column chosen for a ">=" or "=" row: normalize the row
            inv = 1 / rows[r][j]
            rows[r] = [x * inv for x in rows[r]]
            rhs[r] *= inv

    if artificial_rows:
        cost1 = [mpq(0)] * ncols
        for a in range(len(artificial_rows)):
            cost1[n_struct + a] = mpq(-1)
        val1 = tab.optimize(cost1, range(ncols))
        if val1 < 0:
            raise InfeasibleLP("phase one ended with positive infeasibility")
        # drive zero-level artificials out of the basis; drop redundant rows
        keep = []
        for r in range(m):
            j = tab.basis[r]
            if j >= n_struct:
                k = next((k for k in range(n_struct) if tab.rows[r][k]), None)
                if k is None:
                    continue
                tab.pivot(r, k)
            keep.append(r)
        tab.rows = [tab.rows[r][:n_struct] for r in keep]
        tab.rhs = [tab.rhs[r] for r in keep]
        tab.basis = [tab.basis[r] for r in keep]
        tab.ncols = n_struct

    cost = [mpq(0)] * tab.ncols
    for v, c in lp.objective.items():
        if c:
            cost[col[v]] = sign * mpq(c.numerator, c.denominator)
    val = tab.optimize(cost, range(tab.ncols))

    x = [mpq(0)] * tab.ncols
    for r, j in enumerate(tab.basis):
        x[j] = tab.rhs[r]
    assignment = {v: _to_fraction(x[col[v]]) for v in names}
    basis_names = tuple(names[j] if j < n else f"_s{j - n}" for j in tab.basis)
    return LPSolution(
        value=sign * _to_fraction(val),
        assignment=assignment,
        basis=basis_names,
        pivots=tab.pivots,
    )
