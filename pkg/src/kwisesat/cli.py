"""Command-line entry point: ``kwisesat <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .core import format_dimacs, load_dimacs
from .experiments import ExperimentConfig, default_jobs, run_experiment, sweep
from .generators import GeneratorSpec, Model, make_rng, sample
from .hypergraph import certify_sat, expected_counts
from .independence import test_kwise_empirical, verify_kwise_exact
from .refutation import kappa, kappa_bounds, refute_by_kappa, refute_by_xi, xi, xi_sat_threshold
from .core import deduplicate
from .solver import brute_force, count_models, dpll

EXIT_SAT = 10
EXIT_UNSAT = 20


def _emit(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _frac(x):
    return f"{x.numerator}/{x.denominator}"


def _add_model_args(p, need_seed=True):
    p.add_argument("--model", required=True, choices=[m.value for m in Model])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=None)
    if need_seed:
        p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parity", type=int, choices=(0, 1), default=1)
    p.add_argument("--weights", choices=("exact", "display"), default="exact")


def cmd_generate(a) -> int:
    spec = GeneratorSpec(a.model, a.n, a.m, a.seed, a.parity, a.weights)
    g = sample(spec)
    text = format_dimacs(g.instance, g.planted if a.emit_witness else None,
                         comments=[f"model {spec.model.value} seed {spec.seed} branch {g.branch}"])
    if a.out:
        with open(a.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_check_independence(a) -> int:
    spec = GeneratorSpec(a.model, a.n, a.m, a.seed, a.parity, a.weights)
    if a.trials:
        rep = test_kwise_empirical(spec, a.k, a.trials, make_rng(a.seed, 1), a.significance)
    else:
        rep = verify_kwise_exact(spec, a.k, "all" if a.all_positions else None, jobs=a.jobs)
    _emit(rep.to_json(), a.report)
    return 0 if rep.verdict else 1


def cmd_refute(a) -> int:
    inst = load_dimacs(a.file, strict=not a.lenient).instance
    out = {"n": inst.n, "m": inst.m, "certificates": []}
    if a.method in ("xi", "both") and inst.m:
        cert = refute_by_xi(inst)
        out["xi"] = {"value": xi(inst), "threshold": _frac(xi_sat_threshold(inst.n, inst.m)),
                     "verdict": "UNSAT" if cert else "none"}
        if cert:
            out["certificates"].append(cert.to_json())
    if a.method in ("kappa", "both"):
        red = deduplicate(inst)
        cert = refute_by_kappa(inst)
        out["kappa"] = {"value": kappa(red), "m_tilde": red.m,
                        "threshold": _frac(kappa_bounds(inst.n, red.m).sat_lower),
                        "verdict": "UNSAT" if cert else "none"}
        if cert:
            out["certificates"].append(cert.to_json())
    out["verdict"] = "UNSAT" if out["certificates"] else "none"
    _emit(out, a.report)
    return 0


def cmd_certify_sat(a) -> int:
    inst = load_dimacs(a.file, strict=not a.lenient).instance
    cert = certify_sat(inst)
    _emit(cert.to_json() if cert else {"verdict": "none", "statistic": "berge_acyclic"}, a.report)
    return 0


def cmd_expected_counts(a) -> int:
    _emit(expected_counts(a.n, a.m, a.k).to_json(), None)
    return 0


def cmd_solve(a) -> int:
    inst = load_dimacs(a.file, strict=not a.lenient).instance
    if a.method == "count":
        c = count_models(inst)
        sys.stdout.write(f"c models {c}\ns {'SATISFIABLE' if c else 'UNSATISFIABLE'}\n")
        return EXIT_SAT if c else EXIT_UNSAT
    res = brute_force(inst) if a.method == "brute" else dpll(inst)
    if res.sat:
        lits = " ".join(str(i + 1 if b else -(i + 1)) for i, b in enumerate(res.witness))
        sys.stdout.write(f"s SATISFIABLE\nv {lits} 0\n")
    else:
        sys.stdout.write("s UNSATISFIABLE\n")
    return EXIT_SAT if res.sat else EXIT_UNSAT


def cmd_experiment(a) -> int:
    with open(a.config) as fh:
        conf = json.load(fh)
    jobs = a.jobs if a.jobs is not None else default_jobs()
    ranges = conf.pop("sweep", None)
    if ranges:
        reports, text = sweep(conf, ranges, jobs, a.csv)
        _emit([r.to_dict() for r in reports], a.out)
        return 0
    rep = run_experiment(ExperimentConfig.from_dict(conf), jobs)
    if a.out:
        rep.save(a.out)
    else:
        sys.stdout.write(rep.dumps())
    if a.csv:
        from .experiments import records_to_csv
        with open(a.csv, "w", newline="") as fh:
            fh.write(records_to_csv(rep.csv_rows()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kwisesat", description=__doc__)
    p.add_argument("--version", action="version", version=f"kwisesat {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample an instance and write DIMACS")
    _add_model_args(g)
    g.add_argument("--emit-witness", action="store_true", help="write 'c planted <bits>' when present")
    g.add_argument("--out", help="output .cnf (default stdout)")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("check-independence", help="exact or chi-square k-wise independence check")
    _add_model_args(c)
    c.add_argument("--k", type=int, required=True)
    mode = c.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="exact sweep (default)")
    mode.add_argument("--trials", type=int, help="empirical test with this many samples")
    c.add_argument("--significance", type=float, default=1e-3)
    c.add_argument("--all-positions", action="store_true", help="sweep every position set")
    c.add_argument("--jobs", type=int, default=default_jobs())
    c.add_argument("--report")
    c.set_defaults(func=cmd_check_independence)

    for name, func, helptext in (("refute", cmd_refute, "xi / kappa UNSAT certificates"),
                                 ("certify-sat", cmd_certify_sat, "leaf-elimination SAT certificate"),
                                 ("solve", cmd_solve, "exact solver; exit 10 SAT, 20 UNSAT")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("file")
        s.add_argument("--lenient", action="store_true", help="skip malformed clauses instead of failing")
        if name == "refute":
            s.add_argument("--method", choices=("xi", "kappa", "both"), default="both")
        if name == "solve":
            s.add_argument("--method", choices=("brute", "dpll", "count"), default="dpll")
        if name != "solve":
            s.add_argument("--report")
        s.set_defaults(func=func)

    e = sub.add_parser("expected-counts", help="closed-form Berge path/cycle expectations")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--m", type=int, required=True)
    e.add_argument("--k", type=int, required=True)
    e.set_defaults(func=cmd_expected_counts)

    x = sub.add_parser("experiment", help="run a seeded experiment or sweep from a JSON config")
    x.add_argument("--config", required=True)
    x.add_argument("--out")
    x.add_argument("--csv")
    x.add_argument("--jobs", type=int, default=None)
    x.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"kwisesat: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
