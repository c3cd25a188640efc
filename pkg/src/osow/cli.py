"""Command-line interface: ``osow <subcommand> [options]``.

Exit status is 1 when any assertion-class check fails, 2 on usage or
input errors, and 0 otherwise.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import benchmarks as bm
from .experiment import STAGES, fuzz, reports_to_csv, run_experiment
from .generators import FAMILIES, FIXTURES, GeneratorSpec, gen
from .greedy import run_greedy
from .io import load_instance, num, serialize_instance, write_csv
from .model import InstanceError, ordered
from .properties import check_lemma_all, instance_properties
from .reveal import build_reveal, revealed_table_instance, verify_reveal
from .uiid import UIID_FIXTURES, estimate_ratio


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--cap", type=int, default=None, help="cap for exact enumerations and LP columns")
    p.add_argument("--output", metavar="CSV", help="write a CSV report to this path")
    p.add_argument("--fixture", choices=sorted(FIXTURES), help="use a built-in instance")
    return p


def _with_instance(p: argparse.ArgumentParser) -> None:
    p.add_argument("instance", nargs="?", help="instance JSON file (or use --fixture)")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="osow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate an instance and print it as JSON")
    g.add_argument("--family", choices=FAMILIES, default="stochastic-rewards")
    g.add_argument("--resources", type=int, default=2)
    g.add_argument("--arrivals", "-T", type=int, default=3)
    g.add_argument("--menu-min", type=int, default=1)
    g.add_argument("--menu-max", type=int, default=3)
    g.add_argument("--p-low", default="0.1")
    g.add_argument("--p-high", default="1")
    g.add_argument("--deterministic", action="store_true", help="no activation randomness where optional")
    g.add_argument("--params", default="{}", help="family parameters as a JSON object")

    r = sub.add_parser("run", parents=[common], help="run the full pipeline on one instance")
    _with_instance(r)
    r.add_argument("--stages", default=",".join(STAGES), help=f"comma list from {','.join(STAGES)}")

    b = sub.add_parser("bench", parents=[common], help="compute Greedy and the exact benchmarks")
    _with_instance(b)
    b.add_argument("--which", default="all", choices=["all", "greedy", "opt", "aopt", "optc"])
    b.add_argument("--dump-lp", metavar="FILE", help="write the concave-closure LP in text form")
    b.add_argument("--trace", action="store_true", help="print the Greedy trace as CSV")

    v = sub.add_parser("verify", parents=[common], help="check structural properties and the certificate")
    _with_instance(v)

    rv = sub.add_parser("reveal", parents=[common], help="build and verify the revealed instance")
    _with_instance(rv)
    rv.add_argument("--json", metavar="FILE", help="write the revealed instance here instead of stdout")

    u = sub.add_parser("uiid", parents=[common], help="Monte Carlo ratio estimate under i.i.d. arrivals")
    u.add_argument("--dist", choices=sorted(UIID_FIXTURES), action="append", help="fixture (repeatable; default all)")
    u.add_argument("--trials", type=int, default=10000)

    f = sub.add_parser("fuzz", parents=[common], help="run the pipeline on random instances")
    f.add_argument("--trials", type=int, default=500)
    f.add_argument("--family", choices=FAMILIES, help="single family (default: the mixed corpus)")
    f.add_argument("--resources", type=int, default=2)
    f.add_argument("--arrivals", "-T", type=int, default=3)
    f.add_argument("--max-N", type=int, default=None, help="skip corpus instances with more configurations")
    f.add_argument("--stages", default="greedy,opt,aopt,optc,cert,props")
    f.add_argument("--repro-dir", help="write minimized failing instances here")
    return parser


def _instance(args):
    if args.fixture and getattr(args, "instance", None):
        raise InstanceError("give either an instance file or --fixture, not both")
    if args.fixture:
        return FIXTURES[args.fixture]()
    if not getattr(args, "instance", None):
        raise InstanceError("an instance file or --fixture is required")
    return load_instance(args.instance)


def _caps(args) -> dict:
    if args.cap is None:
        return {}
    return {"opt_cap": args.cap, "aopt_cap": args.cap, "optc_cap": args.cap}


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _stages(text: str) -> list[str]:
    stages = [s.strip() for s in text.split(",") if s.strip()]
    bad = set(stages) - set(STAGES)
    if bad:
        raise InstanceError(f"unknown stages {sorted(bad)}")
    return stages


def cmd_gen(args) -> int:
    if args.fixture:
        sys.stdout.write(serialize_instance(FIXTURES[args.fixture]()))
        return 0
    spec = GeneratorSpec(
        family=args.family,
        n_resources=args.resources,
        T=args.arrivals,
        menu_min=args.menu_min,
        menu_max=args.menu_max,
        p_low=args.p_low,
        p_high=args.p_high,
        seed=args.seed,
        stochastic=not args.deterministic,
        params=json.loads(args.params),
    )
    sys.stdout.write(serialize_instance(gen(spec)))
    return 0


def cmd_run(args) -> int:
    inst = _instance(args)
    rep = run_experiment(inst, _stages(args.stages), **_caps(args))
    for key in ("alg", "opt", "aopt", "optc"):
        val = getattr(rep, key)
        if val is not None:
            print(f"{key.upper():5} {num(val)}")
    if rep.cert_ok is not None:
        print(f"certificate {'holds' if rep.cert_ok else 'FAILS'}")
    for name, ok in rep.checks.items():
        print(f"check {name}: {'ok' if ok else 'FAIL'}")
    for name, ok in rep.properties.items():
        print(f"property {name}: {ok}")
    for stage, msg in rep.errors.items():
        print(f"error in {stage}: {msg}")
    for note in rep.notes:
        print(f"note: {note}")
    if args.output:
        _write(args.output, reports_to_csv([rep]))
    return 0 if rep.ok else 1


def cmd_bench(args) -> int:
    inst = _instance(args)
    caps = _caps(args)
    which = args.which
    rows = {"instance_id": inst.name, "family": inst.family}
    if which in ("all", "greedy"):
        alloc, v, trace = run_greedy(inst)
        rows["ALG"] = v
        print(f"ALG   {num(v)}  {alloc.ids()}")
        if args.trace:
            sys.stdout.write(trace.to_csv(list(inst.objectives)))
    if which in ("all", "opt"):
        alloc, v = bm.opt_bruteforce(inst, caps.get("opt_cap", bm.OPT_CAP))
        rows["OPT"] = v
        print(f"OPT   {num(v)}  {alloc.ids()}")
    if which in ("all", "aopt"):
        _, v = bm.aopt_expectimax(inst, caps.get("aopt_cap", bm.AOPT_CAP))
        rows["AOPT"] = v
        print(f"AOPT  {num(v)}")
    if which in ("all", "optc"):
        sol = bm.solve_optc(inst, caps.get("optc_cap", bm.OPTC_CAP))
        rows["OPTC"] = sol.value
        y = {k: num(x) for k, x in sol.y.items() if x}
        print(f"OPTC  {num(sol.value)}  y={y}")
        if args.dump_lp:
            _write(args.dump_lp, sol.lp.dump())
    if args.output:
        _write(args.output, write_csv([rows], ["instance_id", "family", "ALG", "OPT", "AOPT", "OPTC"]))
    return 0


def cmd_verify(args) -> int:
    inst = _instance(args)
    failed = False
    for rp in instance_properties(inst):
        for r in rp.reports:
            print(f"f_{rp.resource} {r.describe()}")
            if r.name in ("monotone", "SO on arrival order") and not r.holds:
                failed = True
        ground = ordered(inst.N_of(rp.resource))
        f = inst.objectives[rp.resource]
        if 0 < len(ground) <= 8 and f.domain == "full":
            rep = check_lemma_all(f, inst, ground)
            print(f"f_{rp.resource} {rep.describe()}")
            if rep.precondition_met and not rep.holds:
                failed = True
    rep = run_experiment(inst, ("greedy", "opt", "cert"), **_caps(args))
    print(f"certificate (zeta=2): {'holds' if rep.cert_ok else 'FAILS'}")
    if not rep.ok:
        failed = True
    if args.output:
        _write(args.output, reports_to_csv([rep]))
    return 1 if failed else 0


def cmd_reveal(args) -> int:
    inst = _instance(args)
    rev = build_reveal(inst)
    rep = verify_reveal(inst, rev, opt_cap=_caps(args).get("opt_cap", bm.OPT_CAP))
    err = sys.stderr
    print(f"ALG(G) = {num(rep.alg_G)}, ALG(revealed) = {num(rep.alg_hat)}", file=err)
    print(f"OPT^c(G) = {num(rep.optc)}, OPT(revealed) = {num(rep.opt_hat)}", file=err)
    for t, hat, best in rep.dominance:
        print(f"arrival {t}: revealed gain {num(hat)} <= best real gain {num(best)}", file=err)
    for p in rep.properties:
        print(p.describe(), file=err)
    for msg in rep.failures:
        print(f"FAIL: {msg}", file=err)
    text = serialize_instance(revealed_table_instance(rev))
    if args.json:
        _write(args.json, text)
    else:
        sys.stdout.write(text)
    if args.output:
        rows = [{"arrival": t, "revealed_gain": h, "best_real_gain": b} for t, h, b in rep.dominance]
        _write(args.output, write_csv(rows, ["arrival", "revealed_gain", "best_real_gain"]))
    return 0 if rep.holds else 1


def cmd_uiid(args) -> int:
    names = args.dist or sorted(UIID_FIXTURES)
    ok = True
    rows = []
    for name in names:
        est = estimate_ratio(UIID_FIXTURES[name](), args.trials, args.seed)
        passed = est.pathwise_ok and est.lower > est.target
        ok &= passed
        print(
            f"{name}: E[ALG]={float(est.mean_alg):.4f} E[OPTc]={float(est.mean_optc):.4f} "
            f"ratio={float(est.ratio):.4f} lower99={est.lower:.4f} target={est.target:.4f} "
            f"pathwise={'ok' if est.pathwise_ok else 'FAIL'} -> {'pass' if passed else 'FAIL'}"
        )
        rows += [{"distribution": name, **r} for r in est.rows]
    if args.output:
        _write(args.output, write_csv(rows, ["distribution", "trial", "sequence", "ALG", "OPTC"]))
    return 0 if ok else 1


def cmd_fuzz(args) -> int:
    spec = None
    if args.family:
        spec = GeneratorSpec(family=args.family, n_resources=args.resources, T=args.arrivals, seed=args.seed)
    rep = fuzz(spec, args.trials, args.seed, _stages(args.stages), repro_dir=args.repro_dir, max_N=args.max_N)
    print(f"{args.trials} instances, {len(rep.violations)} with violations")
    for name, fails in rep.violations:
        print(f"  {name}: {', '.join(fails)}")
    for path in rep.repro_files:
        print(f"  repro written to {path}")
    if args.output:
        _write(args.output, reports_to_csv(rep.reports))
    return 0 if rep.ok else 1


COMMANDS = {
    "gen": cmd_gen,
    "run": cmd_run,
    "bench": cmd_bench,
    "verify": cmd_verify,
    "reveal": cmd_reveal,
    "uiid": cmd_uiid,
    "fuzz": cmd_fuzz,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InstanceError, bm.CapExceeded, json.JSONDecodeError, OSError) as exc:
        print(f"osow: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
