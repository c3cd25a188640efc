"""Experiment pipeline, fuzzing with minimized repro files, and CSV reports."""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .benchmarks import (
    AOPT_CAP,
    OPT_CAP,
    OPTC_CAP,
    aopt_expectimax,
    build_certificate,
    opt_bruteforce,
    solve_optc,
    verify_certificate,
)
from .generators import GeneratorSpec, fuzz_corpus, gen
from .greedy import run_greedy
from .io import read_csv, save_instance, write_csv
from .model import Instance
from .properties import check_interleaved_bound, instance_properties, interleaved_blocks

STAGES = ("greedy", "opt", "aopt", "optc", "cert", "props", "reveal")
CSV_COLUMNS = ["instance_id", "family", "ALG", "OPT", "AOPT", "OPTC", "ratio_alg_optc", "cert_ok", "checks_ok"]


@dataclass
class ExperimentReport:
    instance_id: str
    family: str
    alg: Fraction | None = None
    opt: Fraction | None = None
    aopt: Fraction | None = None
    optc: Fraction | None = None
    cert_ok: bool | None = None
    checks: dict[str, bool] = field(default_factory=dict)
    properties: dict[str, bool] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def ratio_alg_optc(self) -> Fraction | None:
        if self.alg is None or not self.optc:
            return None
        return self.alg / self.optc

    @property
    def checks_ok(self) -> bool:
        return all(self.checks.values()) and not self.errors

    @property
    def ok(self) -> bool:
        return self.checks_ok and self.cert_ok is not False

    def failures(self) -> list[str]:
        out = [name for name, ok in self.checks.items() if not ok]
        if self.cert_ok is False:
            out.append("certificate")
        out += [f"{stage} error: {msg}" for stage, msg in self.errors.items()]
        return out

    def row(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "family": self.family,
            "ALG": self.alg,
            "OPT": self.opt,
            "AOPT": self.aopt,
            "OPTC": self.optc,
            "ratio_alg_optc": self.ratio_alg_optc,
            "cert_ok": self.cert_ok,
            "checks_ok": self.checks_ok,
        }


def run_experiment(
    inst: Instance,
    which: Iterable[str] = STAGES,
    opt_cap: int = OPT_CAP,
    aopt_cap: int = AOPT_CAP,
    optc_cap: int = OPTC_CAP,
) -> ExperimentReport:
    """Run the requested stages and every ordering check they make possible.

    Assertion-class checks (a failure is a bug or a counterexample) go to
    ``checks``; informational properties such as submodularity go to
    ``properties``.  Errors are attributed to the stage that raised them.
    """
    which = set(which)
    unknown = which - set(STAGES)
    if unknown:
        raise ValueError(f"unknown stages {sorted(unknown)}; choose from {STAGES}")
    rep = ExperimentReport(inst.name, inst.family)
    trace = alloc = opt_alloc = None

    def stage(name, fn):
        try:
            return fn()
        except Exception as exc:  # reported per stage, not raised
            rep.errors[name] = f"{type(exc).__name__}: {exc}"
            return None

    if which & {"greedy", "cert", "props", "reveal"}:
        out = stage("greedy", lambda: run_greedy(inst))
        if out:
            alloc, rep.alg, trace = out
            rep.checks["greedy telescopes"] = trace.total_gain() == rep.alg
    if which & {"opt", "cert", "props"}:
        out = stage("opt", lambda: opt_bruteforce(inst, opt_cap))
        if out:
            opt_alloc, rep.opt = out
    if "aopt" in which:
        out = stage("aopt", lambda: aopt_expectimax(inst, aopt_cap))
        if out:
            rep.aopt = out[1]
    if "optc" in which:
        out = stage("optc", lambda: solve_optc(inst, optc_cap))
        if out:
            rep.optc = out.value
            rep.checks["closure solution valid"] = not out.violations(inst)

    if rep.alg is not None and rep.opt is not None:
        rep.checks["ALG >= OPT/2"] = 2 * rep.alg >= rep.opt
    if rep.opt is not None and rep.aopt is not None:
        rep.checks["OPT <= AOPT"] = rep.opt <= rep.aopt
    if rep.aopt is not None and rep.optc is not None:
        rep.checks["AOPT <= OPTC"] = rep.aopt <= rep.optc
    if rep.alg is not None and rep.optc is not None:
        rep.checks["ALG >= OPTC/2"] = 2 * rep.alg >= rep.optc

    if "cert" in which and trace is not None and opt_alloc is not None:
        def cert():
            c = build_certificate(inst, trace, opt_alloc)
            return verify_certificate(inst, c, rep.alg, opt_alloc)[0]

        rep.cert_ok = stage("cert", cert)

    if "props" in which:
        def props():
            for rp in instance_properties(inst):
                for r in rp.reports:
                    key = f"f_{rp.resource} {r.name}"
                    if r.name in ("monotone", "SO on arrival order"):
                        rep.checks[key] = r.holds
                    else:
                        rep.properties[key] = r.holds
            if trace is not None and opt_alloc is not None:
                blocks = interleaved_blocks(
                    {s.t: s.chosen for s in trace.steps if s.chosen is not None},
                    dict(opt_alloc.choice),
                    [a.t for a in inst.arrivals],
                )
                for i in inst.objectives:
                    r = check_interleaved_bound(lambda S, i=i: inst.F(i, S), blocks)
                    rep.checks[f"F_{i} interleaved bound"] = r.holds

        stage("props", props)

    if "reveal" in which:
        from .reveal import verify_reveal

        out = stage("reveal", lambda: verify_reveal(inst, opt_cap=opt_cap))
        if out is not None:
            rep.checks["reveal"] = out.holds
            rep.notes += out.failures
    return rep


def reports_to_csv(reports: Sequence[ExperimentReport]) -> str:
    return write_csv([r.row() for r in reports], CSV_COLUMNS)


def reports_from_csv(text: str) -> list[dict]:
    return read_csv(text, numeric=["ALG", "OPT", "AOPT", "OPTC", "ratio_alg_optc"], boolean=["cert_ok", "checks_ok"])


# fuzzing -------------------------------------------------------------------


@dataclass
class FuzzReport:
    trials: int
    seed: int
    reports: list[ExperimentReport]
    violations: list[tuple[str, list[str]]]
    repro_files: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def _failing(inst: Instance, which) -> bool:
    return not run_experiment(inst, which).ok


def drop_configuration(inst: Instance, cid: str) -> Instance | None:
    """The instance without one configuration, or ``None`` if that is not buildable."""
    from .io import instance_from_dict, instance_to_dict

    doc = instance_to_dict(inst)
    doc["configurations"] = [c for c in doc["configurations"] if c["id"] != cid]
    doc["activation"].pop(cid, None)
    for key, obj in doc["objectives"].items():
        _drop_from_objective(obj, cid)
    try:
        return instance_from_dict(doc)
    except Exception:
        return None


def _drop_from_objective(obj: dict, cid: str) -> None:
    for field_name in ("bids", "weights"):
        if field_name in obj:
            obj[field_name].pop(cid, None)
    if obj.get("family") == "table":
        obj["table"] = [row for row in obj["table"] if cid not in row[0]]
    for _, part in obj.get("parts", []):
        _drop_from_objective(part, cid)


def minimize(inst: Instance, which=STAGES) -> Instance:
    """Greedily delete configurations while the failure persists."""
    current = inst
    changed = True
    while changed:
        changed = False
        for e in current.N:
            smaller = drop_configuration(current, e.id)
            if smaller is not None and _failing(smaller, which):
                current = smaller
                changed = True
                break
    return current


def fuzz(
    spec: GeneratorSpec | None,
    trials: int,
    seed: int = 0,
    which: Iterable[str] = ("greedy", "opt", "aopt", "optc", "cert", "props"),
    repro_dir: str | None = None,
    max_N: int | None = None,
) -> FuzzReport:
    """Run the pipeline on ``trials`` random instances.

    ``spec=None`` draws from the mixed corpus; otherwise the spec's family
    and sizes are used with per-trial seeds.  Failing instances are
    minimized and written to ``repro_dir`` when given.
    """
    which = tuple(which)
    if spec is None:
        instances = fuzz_corpus(trials, seed, max_N=max_N)
    else:
        instances = (
            gen(GeneratorSpec(**{**spec.__dict__, "seed": random.Random(f"{seed}:{k}").randrange(2**31)}), name=f"{spec.family}-{seed}-{k}")
            for k in range(trials)
        )
    reports, violations, files = [], [], []
    for inst in instances:
        rep = run_experiment(inst, which)
        reports.append(rep)
        if not rep.ok:
            violations.append((inst.name, rep.failures()))
            if repro_dir:
                small = minimize(inst, which)
                os.makedirs(repro_dir, exist_ok=True)
                path = os.path.join(repro_dir, f"repro-{inst.name}.json")
                save_instance(small, path)
                files.append(path)
    return FuzzReport(trials, seed, reports, violations, files)
