"""Command-line runner: ``nlexit <experiment> --config path.json [--out dir] [--threads n]``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import config as C
from .exits import NO_EXIT, write_exit_csv
from .functionals import PathBatch, clamped_exit, endpoint, exit_approximant
from .lab.conditions import ConditionParams
from .lab.counterexamples import counterexample_run
from .lab.experiments import family_hypotheses, qc_probe, run_exit_identity, run_moment_bound
from .lab.partition import PartitionScheme, partition_indicator_approx
from .paths import write_ndjson
from .reports import FAIL, INFO, PASS, SCHEMA_VERSION, code_version, dumps, make_report, summary_markdown
from .upper import SURROGATE_NOTE


def _params(cfg):
    return cfg.get("params", {})


def _cond_params(cfg, dim):
    p = _params(cfg)
    return ConditionParams(lam=p.get("lambda", 1.0 / dim), epsilon=p.get("epsilon", 1.0))


def run_simulate(cfg, threads):
    grid = C.build_grid(cfg)
    fam = C.build_family(cfg, grid)
    ensembles = fam.ensembles(grid, cfg["n_paths"], cfg["seed"], threads)
    per_law = []
    ledger_ok = True
    for ens in ensembles:
        rebuilt = ens.states[:, :-1] + (ens.mart_inc + ens.fv_inc)
        exact = bool(np.array_equal(rebuilt, ens.states[:, 1:]))
        ledger_ok &= exact
        per_law.append({"law_id": ens.law_id, "n": len(ens), "mean_endpoint": ens.states[:, -1].mean(axis=0),
                        "ledger_exact": exact, "failures": list(ens.failures)})
    exports = {}
    if _params(cfg).get("export", "ndjson") == "ndjson":
        def write(fh):
            for ens in ensembles:
                write_ndjson(((int(ens.path_index[i]), ens.path(i)) for i in range(len(ens))), fh, ens.law_id)
        exports["paths.ndjson"] = write
    report = make_report(
        "simulate",
        hypotheses={"checked": [], "passed": True},
        metrics={"steps": grid.steps, "dt": grid.dt, "n_laws": len(ensembles), "per_law": per_law,
                 "ledger_exact": ledger_ok},
        tolerances={},
        verdict=INFO if ledger_ok else FAIL,
        failures=[] if ledger_ok else ["ledger reconstruction is not exact"],
    )
    return report, exports


def run_exit_stats(cfg, threads):
    grid = C.build_grid(cfg)
    fam = C.build_family(cfg, grid)
    q = C.build_domain(cfg)
    clamp = cfg["clamp"]
    samples = [fam.exit_sample(law, grid, q, cfg["n_paths"], cfg["seed"], threads) for law in fam.laws]
    per_law = [{
        "law_id": s.law_id,
        "mean_min_tau_open": float(s.clamped_open(clamp).mean()),
        "mean_min_tau_closure": float(s.clamped_closed(clamp).mean()),
        "unexited_open": float(np.mean(s.idx_open == NO_EXIT)),
        "unexited_closure": float(np.mean(s.idx_closed == NO_EXIT)),
    } for s in samples]
    exports = {}
    if _params(cfg).get("export", "csv") == "csv":
        exports["exits.csv"] = lambda fh: write_exit_csv(samples, clamp, fh)
    report = make_report(
        "exit-stats",
        hypotheses={"checked": [], "passed": True},
        metrics={"per_law": per_law, "clamp": clamp, "dt": grid.dt},
        tolerances={},
        verdict=INFO,
        notes=[SURROGATE_NOTE, "first-node exit detection"],
    )
    return report, exports


def run_check_conditions(cfg, threads):
    grid = C.build_grid(cfg)
    fam = C.build_family(cfg, grid)
    q = C.build_domain(cfg)
    params = _cond_params(cfg, fam.dim)
    hyp = family_hypotheses(fam, q, grid, params, _params(cfg).get("n_check", 32), cfg["seed"])
    failures = [f"law {lid}: clause ({v['failure']['failed_clause']}) fails at step "
                f"{v['failure']['first_failure_step']}"
                for lid, v in hyp["per_law"].items() if not v["passed"]]
    if hyp["exterior_ball"] is not True:
        failures.append(f"exterior ball condition: {hyp['exterior_ball']}")
    report = make_report(
        "check-conditions",
        hypotheses=hyp,
        metrics={"laws_checked": len(hyp["per_law"]),
                 "laws_passed": sum(v["passed"] for v in hyp["per_law"].values())},
        tolerances={"psd": 1e-12},
        verdict=PASS if hyp["passed"] else FAIL,
        failures=failures,
    )
    return report, {}


def run_exit_identity_cmd(cfg, threads):
    grid = C.build_grid(cfg)
    fam = C.build_family(cfg, grid)
    q = C.build_domain(cfg)
    p = _params(cfg)
    report = run_exit_identity(fam, q, cfg["clamp"], sorted(cfg["grid"]["dt_levels"], reverse=True),
                               cfg["n_paths"], cfg["seed"], params=_cond_params(cfg, fam.dim),
                               n_check=p.get("n_check", 32), d_max=p.get("d_max"), threads=threads)
    return report, {}


def run_moment_bound_cmd(cfg, threads):
    grid = C.build_grid(cfg)
    fam = C.build_family(cfg, grid)
    q = C.build_domain(cfg)
    p = _params(cfg)
    report = run_moment_bound(fam, q, p.get("lambda", 1.0), p.get("epsilon", 1.0),
                              component=p.get("component", 0), dt=grid.dt,
                              t_big=p.get("t_big", grid.horizon), n_paths=cfg["n_paths"],
                              seed=cfg["seed"], n_check=p.get("n_check", 16), threads=threads)
    return report, {}


def run_qc_probe(cfg, threads):
    grid = C.build_grid(cfg)
    fam = C.build_family(cfg, grid)
    q = C.build_domain(cfg)
    p = _params(cfg)
    t = p.get("t", grid.horizon)
    kind = p.get("functional", "exit_open")
    if kind == "endpoint":
        functional = endpoint(0)
        approximants = [functional]
    else:
        functional = clamped_exit(q, t, closed=kind == "exit_closed")
        approximants = [exit_approximant(q, t, n) for n in p.get("levels", [1, 4, 16, 64, 256])]
    batches = [PathBatch(ens.grid, ens.states, ens.law_ids, ens.path_index)
               for ens in fam.ensembles(grid, cfg["n_paths"], cfg["seed"], threads)]
    report = qc_probe(batches, functional, approximants, p.get("eps", 0.05), p.get("deltas", [0.1, 0.03, 0.01]))
    return report, {}


def run_counterexample(cfg, threads):
    p = dict(_params(cfg))
    which = p.pop("which")
    if which != "pointmass":
        p.update(seed=cfg["seed"], threads=threads)
        if "n_paths" in cfg:
            p["n_paths"] = cfg["n_paths"]
    return counterexample_run(which, **p), {}


def run_partition(cfg, threads):
    p = _params(cfg)
    rng = np.random.default_rng(cfg["seed"])
    taus = list(p.get("taus", [])) + rng.uniform(0, 1, p.get("n_random_taus", 100)).tolist()
    rows, failures = [], []
    for k in p.get("levels", list(range(4, 13))):
        scheme = PartitionScheme(k)
        scheme.check()
        reps = [partition_indicator_approx(scheme, tau, check=False) for tau in taus]
        bad = [r for r in reps if not r.passed]
        failures += [f"level {k}, tau={r.tau:.6g}: identity error {r.identity_max_error:.3g}, "
                     f"gap {r.l1_gap:.3g} > {r.gap_bound:.3g}" for r in bad]
        rows.append({"level": k, "max_identity_error": max(r.identity_max_error for r in reps),
                     "max_l1_gap": max(r.l1_gap for r in reps), "mean_l1_gap": float(np.mean([r.l1_gap for r in reps])),
                     "gap_bound": 3 * 2.0 ** -k})
    report = make_report(
        "partition-approx",
        hypotheses={"checked": ["partition of unity"], "passed": True},
        metrics={"levels": rows, "n_taus": len(taus)},
        tolerances={"identity": 1e-12, "gap": "3 * 2^-k"},
        verdict=PASS if not failures else FAIL,
        failures=failures,
    )
    return report, {}


RUNNERS = {
    "simulate": run_simulate,
    "exit-stats": run_exit_stats,
    "check-conditions": run_check_conditions,
    "exit-identity": run_exit_identity_cmd,
    "moment-bound": run_moment_bound_cmd,
    "qc-probe": run_qc_probe,
    "counterexample": run_counterexample,
    "partition-approx": run_partition,
}


def run(cfg: dict, out_dir: Path, threads: int = 1) -> int:
    """Run a validated config, write artifacts into ``out_dir`` and return the exit status."""
    report, exports = RUNNERS[cfg["experiment"]](cfg, threads)
    report = {**report, "schema_version": SCHEMA_VERSION, "config": cfg, "code_version": code_version()}
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(dumps(report))
    (out_dir / "summary.md").write_text(summary_markdown(report))
    for name, write in exports.items():
        with open(out_dir / name, "w", newline="") as fh:
            write(fh)
    return 0 if report["verdict"] in (PASS, INFO) else 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="nlexit", description=__doc__)
    ap.add_argument("experiment", choices=C.EXPERIMENTS)
    ap.add_argument("--config", required=True, type=Path)
    ap.add_argument("--out", type=Path, default=None, help="output directory (overrides output_dir)")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)
    if args.threads < 1:
        ap.error("--threads must be at least 1")
    try:
        cfg, _ = C.load(args.config)
        if cfg["experiment"] != args.experiment:
            raise C.ConfigError([("/experiment", f"config is for {cfg['experiment']!r}, "
                                                 f"command line asks for {args.experiment!r}")])
    except C.ConfigError as exc:
        json.dump({"error": "config", "failures": [{"pointer": p, "message": m} for p, m in exc.errors]},
                  sys.stderr, indent=2)
        sys.stderr.write("\n")
        return 2
    out = args.out or Path(cfg.get("output_dir", "nlexit-out"))
    status = run(cfg, out, args.threads)
    report = json.loads((out / "report.json").read_text())
    print(f"{report['experiment']}: {report['verdict']} -> {out}")
    for f in report["failures"]:
        print(f"  failure: {f}")
    return status


if __name__ == "__main__":
    sys.exit(main())
