"""Seeded experiment harness.

Config (JSON object)::

    {
      "model": "ind" | "pairwise" | "threewise" | "univar",
      "n": 10,
      "m": 40 | {"rule": "fixed", "value": 40}
             | {"rule": "density", "ratio": 4.26}          # round(ratio * n)
             | {"rule": "lst", "k": 2}                     # floor(n^(1-1/k) / 12)
             | {"rule": "threewise_max"},                  # 2 floor(C(n,3) / 6)
      "trials": 1000,
      "seed": 0,
      "measures": ["sat", "planted", "xi", "kappa", "refute", "leaf", "cycle"],
      "solver": "auto" | "dpll" | "brute",                 # auto: brute for n <= 20
      "parity": 1,
      "weights": "exact",
      "z": 1.96                                            # Wilson interval quantile
    }

Trial ``i`` draws from the stream ``make_rng(seed, i)``; records are merged in
trial order, so reports do not depend on the worker count.  The only
non-deterministic field is ``provenance.wall_time_s``.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .core import evaluate, num_triples
from .generators import GeneratorSpec, Model, make_rng, sample
from .hypergraph import VariableHypergraph, find_incidence_cycle, leaf_elimination_solve
from .refutation import kappa, refute_by_kappa, refute_by_xi, xi
from .solver import brute_force, dpll

__all__ = ["ExperimentConfig", "ExperimentReport", "run_experiment", "sweep",
           "compute_aggregates", "wilson_interval", "resolve_m", "default_jobs",
           "REPORT_VERSION", "JOBS_ENV"]

REPORT_VERSION = 1
JOBS_ENV = "KWISESAT_JOBS"
ALL_MEASURES = ("sat", "planted", "xi", "kappa", "refute", "leaf", "cycle")


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def resolve_m(model: Model, n: int, rule) -> int | None:
    if rule is None:
        return None
    if isinstance(rule, int):
        return rule
    kind = rule.get("rule", "fixed")
    if kind == "fixed":
        return int(rule["value"])
    if kind == "density":
        return int(round(float(rule["ratio"]) * n))
    if kind == "lst":
        k = int(rule["k"])
        # floor(n^(1 - 1/k) / 12) computed in integers: largest m with (12 m)^k <= n^(k-1)
        m = int(n ** (1 - 1 / k) / 12) + 1
        while m > 0 and (12 * m) ** k > n ** (k - 1):
            m -= 1
        return m
    if kind == "threewise_max":
        return 2 * (num_triples(n) // 6)
    raise ValueError(f"unknown m rule {kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    n: int
    m: object = None
    trials: int = 100
    seed: int = 0
    measures: tuple = ("sat",)
    solver: str = "auto"
    parity: int = 1
    weights: str = "exact"
    z: float = 1.96

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "measures" in d:
            d["measures"] = tuple(d["measures"])
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return {"model": Model.parse(self.model).value, "n": self.n, "m": self.m,
                "trials": self.trials, "seed": self.seed, "measures": list(self.measures),
                "solver": self.solver, "parity": self.parity, "weights": self.weights,
                "z": self.z}

    def spec(self) -> GeneratorSpec:
        model = Model.parse(self.model)
        return GeneratorSpec(model, self.n, resolve_m(model, self.n, self.m), self.seed,
                             self.parity, self.weights)

    def validate(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        bad = set(self.measures) - set(ALL_MEASURES)
        if bad:
            raise ValueError(f"unknown measures {sorted(bad)}")
        if self.solver not in ("auto", "dpll", "brute"):
            raise ValueError(f"unknown solver {self.solver!r}")
        self.spec()


def _solve(instance, solver: str):
    if solver == "brute" or (solver == "auto" and instance.n <= 20):
        return brute_force(instance).sat
    return dpll(instance).sat


def _trial(cfg: ExperimentConfig, spec: GeneratorSpec, index: int) -> dict:
    g = sample(spec, make_rng(cfg.seed, index))
    inst = g.instance
    rec: dict = {"trial": index, "branch": g.branch, "m": inst.m,
                 "m_tilde": int(np.unique(inst.ids).size)}
    ms = set(cfg.measures)
    if "sat" in ms:
        rec["sat"] = _solve(inst, cfg.solver)
    if "planted" in ms:
        rec["planted_ok"] = None if g.planted is None else evaluate(inst, g.planted).satisfied
    if "xi" in ms:
        rec["xi"] = xi(inst)
    if "kappa" in ms:
        rec["kappa"] = kappa(inst)
    if "refute" in ms:
        rec["xi_unsat_cert"] = refute_by_xi(inst) is not None
        rec["kappa_unsat_cert"] = refute_by_kappa(inst) is not None
    if "leaf" in ms:
        rec["leaf_sat_cert"] = leaf_elimination_solve(inst) is not None
    if "cycle" in ms:
        rec["incidence_cycle"] = find_incidence_cycle(VariableHypergraph.from_instance(inst)) is not None
    return rec


def _trial_block(args):
    cfg, lo, hi = args
    spec = cfg.spec()
    return [_trial(cfg, spec, i) for i in range(lo, hi)]


def wilson_interval(successes: int, total: int, z: float = 1.96) -> tuple[float, float]:
    if total == 0:
        return (0.0, 1.0)
    p = successes / total
    denom = 1 + z * z / total
    centre = (p + z * z / (2 * total)) / denom
    half = z * math.sqrt(p * (1 - p) / total + z * z / (4 * total * total)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))


_BOOL_FIELDS = ("sat", "planted_ok", "xi_unsat_cert", "kappa_unsat_cert", "leaf_sat_cert",
                "incidence_cycle")
_NUM_FIELDS = ("m_tilde", "xi", "kappa")


def compute_aggregates(records: list[dict], z: float = 1.96) -> dict:
    """Aggregates as a pure function of the per-trial records."""
    agg: dict = {"trials": len(records)}
    branches: dict = {}
    for r in records:
        branches[r["branch"]] = branches.get(r["branch"], 0) + 1
    agg["branch_counts"] = dict(sorted(branches.items()))
    for f in _BOOL_FIELDS:
        vals = [r[f] for r in records if r.get(f) is not None]
        if not vals:
            continue
        k = sum(bool(v) for v in vals)
        lo, hi = wilson_interval(k, len(vals), z)
        agg[f] = {"count": k, "total": len(vals), "rate": k / len(vals), "wilson": [lo, hi]}
    for f in _NUM_FIELDS:
        vals = [r[f] for r in records if r.get(f) is not None]
        if not vals:
            continue
        n = len(vals)
        mean = math.fsum(vals) / n
        var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1) if n > 1 else 0.0
        agg[f] = {"mean": mean, "variance": var, "stderr": math.sqrt(var / n)}
    return agg


@dataclass
class ExperimentReport:
    config: dict
    records: list
    aggregates: dict
    provenance: dict = field(default_factory=dict)
    version: int = REPORT_VERSION

    def to_dict(self, provenance: bool = True) -> dict:
        d = {"version": self.version, "config": self.config, "aggregates": self.aggregates,
             "records": self.records}
        if provenance:
            d["provenance"] = self.provenance
        return d

    def dumps(self, provenance: bool = True) -> str:
        return json.dumps(self.to_dict(provenance), indent=2, sort_keys=True) + "\n"

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "ExperimentReport":
        with open(path) as fh:
            d = json.load(fh)
        if d.get("version") != REPORT_VERSION:
            raise ValueError(f"unsupported report version {d.get('version')}")
        return cls(d["config"], d["records"], d["aggregates"], d.get("provenance", {}), d["version"])

    def verify_aggregates(self) -> bool:
        recomputed = json.loads(json.dumps(compute_aggregates(self.records, self.config.get("z", 1.96))))
        return recomputed == json.loads(json.dumps(self.aggregates))

    def csv_rows(self, extra: dict | None = None) -> list[dict]:
        extra = extra or {}
        return [{**extra, **r} for r in self.records]


def run_experiment(config: ExperimentConfig | dict, jobs: int | None = None) -> ExperimentReport:
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    cfg.validate()
    jobs = default_jobs() if jobs is None else max(1, jobs)
    start = time.perf_counter()
    T = cfg.trials
    if jobs == 1:
        records = _trial_block((cfg, 0, T))
    else:
        nblocks = min(T, jobs * 4)
        bounds = np.linspace(0, T, nblocks + 1).astype(int)
        blocks = [(cfg, int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        with ProcessPoolExecutor(jobs) as ex:
            records = [r for part in ex.map(_trial_block, blocks) for r in part]
    spec = cfg.spec()
    conf = cfg.to_dict()
    conf["m_resolved"] = spec.m
    return ExperimentReport(
        config=conf, records=records, aggregates=compute_aggregates(records, cfg.z),
        provenance={"toolkit": "kwisesat", "version": __version__,
                    "wall_time_s": time.perf_counter() - start},
    )


def sweep(template: dict, ranges: dict, jobs: int | None = None,
          csv_path=None) -> tuple[list[ExperimentReport], str]:
    """Run the cartesian product of ``ranges`` over ``template``.

    Returns the reports and the CSV text (one row per trial, prefixed with
    the point index and swept parameters); also written to ``csv_path``.
    """
    keys = sorted(ranges)
    reports = []
    rows = []
    for point, values in enumerate(itertools.product(*(ranges[k] for k in keys))):
        cfg = dict(template)
        cfg.update(zip(keys, values))
        rep = run_experiment(cfg, jobs)
        reports.append(rep)
        prefix = {"point": point}
        prefix.update({f"param_{k}": json.dumps(v) if isinstance(v, dict) else v
                       for k, v in zip(keys, values)})
        rows.extend(rep.csv_rows(prefix))
    text = records_to_csv(rows)
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            fh.write(text)
    return reports, text


def records_to_csv(rows: list[dict]) -> str:
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()
