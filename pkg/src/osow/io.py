"""JSON instance files and exact CSV reports.

Numbers are written as ``"p/q"`` strings (integers as plain strings) and
read back with :func:`osow.model.as_value`, so decimal strings such as
``"0.5"`` are accepted on input.  Unknown fields are rejected with the
path of the offending field.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from .model import Arrival, Configuration, Instance, InstanceError, Resource, as_value, build_instance
from .objectives import (
    BudgetAdditiveOracle,
    CoverageOracle,
    ReusableOracle,
    SumOracle,
    TableOracle,
    ValueOracle,
    WeightedConfigOracle,
    ZeroOracle,
)
from .stochastic import ActivationModel

FORMAT = "osow-instance/1"

_TOP_KEYS = {
    "format",
    "name",
    "family",
    "resources",
    "arrivals",
    "configurations",
    "activation",
    "objectives",
    "arrival_model",
    "meta",
}
_REQUIRED = {"resources", "arrivals", "configurations", "objectives"}


class SchemaError(InstanceError):
    """An instance document does not follow the schema."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def num(x: Fraction) -> str:
    """Exact text form: ``"3"`` or ``"3/4"``."""
    x = as_value(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _keys(obj: Any, path: str, allowed: set[str], required: Iterable[str] = ()) -> dict:
    if not isinstance(obj, dict):
        raise SchemaError(path, f"expected an object, got {type(obj).__name__}")
    extra = set(obj) - allowed
    if extra:
        raise SchemaError(path, f"unknown fields {sorted(extra)}")
    for k in required:
        if k not in obj:
            raise SchemaError(path, f"missing field {k!r}")
    return obj


def _value(x: Any, path: str) -> Fraction:
    if isinstance(x, float):
        raise SchemaError(path, "write numbers as strings (e.g. \"0.5\") to keep them exact")
    try:
        return as_value(x)
    except InstanceError as exc:
        raise SchemaError(path, str(exc)) from None


def _int(x: Any, path: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise SchemaError(path, "expected an integer")
    return x


# objectives ----------------------------------------------------------------


def _oracle_to_dict(o: ValueOracle) -> dict[str, Any]:
    return o.descriptor()


def _oracle_from_dict(d: Any, i: int, path: str, configs: Sequence[Configuration], times) -> ValueOracle:
    if not isinstance(d, dict) or "family" not in d:
        raise SchemaError(path, "objective needs a 'family' field")
    fam = d["family"]
    if fam == "zero":
        _keys(d, path, {"family"})
        return ZeroOracle(i)
    if fam == "coverage":
        _keys(d, path, {"family"})
        return CoverageOracle(i)
    if fam == "budget_additive":
        _keys(d, path, {"family", "budget", "bids"}, ["budget", "bids"])
        bids = {k: _value(v, f"{path}.bids.{k}") for k, v in _keys(d["bids"], f"{path}.bids", set(d["bids"])).items()}
        return BudgetAdditiveOracle(i, _value(d["budget"], f"{path}.budget"), bids)
    if fam == "weighted":
        _keys(d, path, {"family", "weights", "capacity"}, ["weights"])
        w = {k: _value(v, f"{path}.weights.{k}") for k, v in _keys(d["weights"], f"{path}.weights", set(d["weights"])).items()}
        cap = d.get("capacity")
        return WeightedConfigOracle(i, w, None if cap is None else _int(cap, f"{path}.capacity"))
    if fam == "table":
        _keys(d, path, {"family", "table", "domain"}, ["table"])
        rows = d["table"]
        if not isinstance(rows, list):
            raise SchemaError(f"{path}.table", "expected a list of [ids, value] rows")
        table = {}
        for k, row in enumerate(rows):
            if not (isinstance(row, list) and len(row) == 2 and isinstance(row[0], list)):
                raise SchemaError(f"{path}.table[{k}]", "expected [ids, value]")
            table[frozenset(row[0])] = _value(row[1], f"{path}.table[{k}]")
        ground = [e for e in configs if i in e.R]
        return TableOracle(i, ground, table, d.get("domain", "full"))
    if fam == "reusable":
        _keys(d, path, {"family", "duration"}, ["duration"])
        return ReusableOracle(i, _value(d["duration"], f"{path}.duration"), times)
    if fam == "sum":
        _keys(d, path, {"family", "parts"}, ["parts"])
        parts = []
        for k, part in enumerate(d["parts"]):
            if not (isinstance(part, list) and len(part) == 2):
                raise SchemaError(f"{path}.parts[{k}]", "expected [weight, objective]")
            parts.append(
                (_value(part[0], f"{path}.parts[{k}][0]"), _oracle_from_dict(part[1], i, f"{path}.parts[{k}][1]", configs, times))
            )
        return SumOracle(parts)
    raise SchemaError(path, f"unknown objective family {fam!r}")


# instances -----------------------------------------------------------------


def _activation_to_dict(model: ActivationModel) -> dict[str, Any]:
    out = {}
    for cid in sorted(model.declared):
        spec = model.declared[cid]
        if spec["type"] == "independent":
            out[cid] = {"type": "independent", "p": {str(i): num(p) for i, p in sorted(spec["p"].items())}}
        else:
            rows = sorted(spec["table"].items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))
            out[cid] = {"type": "joint", "table": [[sorted(A), num(p)] for A, p in rows]}
    return out


def instance_to_dict(inst: Instance) -> dict[str, Any]:
    """Canonical JSON-compatible form; equal instances give equal dicts."""
    resources = []
    for r in inst.resources:
        d: dict[str, Any] = {"index": r.index}
        if r.dummy:
            d["dummy"] = True
        resources.append(d)
    arrivals = []
    for a in inst.arrivals:
        d = {"t": a.t}
        if a.time is not None:
            d["time"] = num(a.time)
        if a.type_label is not None:
            d["type"] = a.type_label
        arrivals.append(d)
    return {
        "format": FORMAT,
        "name": inst.name,
        "family": inst.family,
        "resources": resources,
        "arrivals": arrivals,
        "configurations": [{"id": e.id, "t": e.t, "R": sorted(e.R)} for e in inst.N],
        "activation": _activation_to_dict(inst.activation),
        "objectives": {str(i): _oracle_to_dict(o) for i, o in sorted(inst.objectives.items())},
        "arrival_model": inst.arrival_model,
        "meta": inst.meta,
    }


def instance_from_dict(doc: Any) -> Instance:
    doc = _keys(doc, "$", _TOP_KEYS, _REQUIRED)
    if doc.get("format", FORMAT) != FORMAT:
        raise SchemaError("$.format", f"unsupported format {doc['format']!r}")

    resources = []
    for k, r in enumerate(doc["resources"]):
        p = f"$.resources[{k}]"
        _keys(r, p, {"index", "dummy"}, ["index"])
        dummy = r.get("dummy", False)
        if not isinstance(dummy, bool):
            raise SchemaError(f"{p}.dummy", "expected true or false")
        resources.append(Resource(_int(r["index"], f"{p}.index"), dummy))

    arrivals = []
    for k, a in enumerate(doc["arrivals"]):
        p = f"$.arrivals[{k}]"
        _keys(a, p, {"t", "time", "type"}, ["t"])
        time = _value(a["time"], f"{p}.time") if "time" in a else None
        label = a.get("type")
        if label is not None and not isinstance(label, str):
            raise SchemaError(f"{p}.type", "expected a string")
        arrivals.append(Arrival(_int(a["t"], f"{p}.t"), time, label))

    configs = []
    for k, c in enumerate(doc["configurations"]):
        p = f"$.configurations[{k}]"
        _keys(c, p, {"id", "t", "R"}, ["id", "t", "R"])
        if not isinstance(c["id"], str) or not c["id"]:
            raise SchemaError(f"{p}.id", "expected a nonempty string")
        if not isinstance(c["R"], list):
            raise SchemaError(f"{p}.R", "expected a list of resource indices")
        R = frozenset(_int(i, f"{p}.R") for i in c["R"])
        configs.append(Configuration(c["id"], _int(c["t"], f"{p}.t"), R))

    act = doc.get("activation", {})
    if not isinstance(act, dict):
        raise SchemaError("$.activation", "expected an object keyed by configuration id")
    for cid, spec in act.items():
        p = f"$.activation.{cid}"
        if not isinstance(spec, dict):
            raise SchemaError(p, "expected an object")
        if spec.get("type") == "independent":
            _keys(spec, p, {"type", "p"}, ["p"])
            for i, v in _keys(spec["p"], f"{p}.p", set(spec["p"])).items():
                _value(v, f"{p}.p.{i}")
        elif spec.get("type") == "joint":
            _keys(spec, p, {"type", "table"}, ["table"])
            for k, row in enumerate(spec["table"]):
                if not (isinstance(row, list) and len(row) == 2 and isinstance(row[0], list)):
                    raise SchemaError(f"{p}.table[{k}]", "expected [active resources, probability]")
                _value(row[1], f"{p}.table[{k}]")
        else:
            raise SchemaError(f"{p}.type", "expected 'independent' or 'joint'")
    try:
        activation = ActivationModel(act)
    except InstanceError as exc:
        raise SchemaError("$.activation", str(exc)) from None

    times = {a.t: a.time for a in arrivals}
    objectives = {}
    objs = doc["objectives"]
    if not isinstance(objs, dict):
        raise SchemaError("$.objectives", "expected an object keyed by resource index")
    for key, d in objs.items():
        try:
            i = int(key)
        except ValueError:
            raise SchemaError(f"$.objectives.{key}", "keys must be resource indices") from None
        objectives[i] = _oracle_from_dict(d, i, f"$.objectives.{key}", configs, times)

    arrival_model = doc.get("arrival_model", {"kind": "adversarial"})
    meta = doc.get("meta", {})
    if not isinstance(arrival_model, dict) or not isinstance(meta, dict):
        raise SchemaError("$", "arrival_model and meta must be objects")
    return build_instance(
        resources=resources,
        arrivals=arrivals,
        configurations=configs,
        objectives=objectives,
        activation=activation,
        name=doc.get("name", "instance"),
        family=doc.get("family", "custom"),
        arrival_model=arrival_model,
        meta=meta,
    )


def serialize_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


def parse_instance(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    return instance_from_dict(doc)


def load_instance(path: str) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def save_instance(inst: Instance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_instance(inst))


# CSV -----------------------------------------------------------------------


def write_csv(rows: Sequence[Mapping[str, Any]], columns: Sequence[str]) -> str:
    """Rows to CSV text; rationals become ``p/q`` and booleans ``true``/``false``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _cell(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (Fraction, int)):
        return num(x)
    return str(x)


def read_csv(text: str, numeric: Iterable[str] = (), boolean: Iterable[str] = ()) -> list[dict[str, Any]]:
    """Inverse of :func:`write_csv` for the named numeric and boolean columns."""
    numeric, boolean = set(numeric), set(boolean)
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        rec: dict[str, Any] = {}
        for k, v in row.items():
            if v == "" and (k in numeric or k in boolean):
                rec[k] = None
            elif k in numeric:
                rec[k] = Fraction(v)
            elif k in boolean:
                rec[k] = v == "true"
            else:
                rec[k] = v
        out.append(rec)
    return out
