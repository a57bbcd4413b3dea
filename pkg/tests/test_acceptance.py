"""The ten acceptance criteria at their stated sizes and tolerances.

Each test records a ``criterion`` property; the terminal summary prints one
pass/fail line per criterion.
"""

import json
import math
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from nlexit import cli
from nlexit.domains import ConeTest, Interval, Region
from nlexit.families import (AnisotropicDiag2, PointMass, ScalarVolInterval, ScenarioFamily, SigmaGrid,
                             family_controls)
from nlexit.functionals import PathBatch
from nlexit.lab.barriers import (BarrierParams, barrier_coefficient, barrier_derivative_check,
                                 barrier_threshold)
from nlexit.lab.conditions import ConditionParams, check_conditions
from nlexit.lab.counterexamples import anisotropic_2d_run, degenerate_gbm_run, pointmass_run
from nlexit.lab.experiments import run_exit_identity, run_moment_bound
from nlexit.lab.partition import PartitionScheme, partition_indicator_approx
from nlexit.paths import TimeGrid
from nlexit.reports import PASS
from nlexit.upper import upper_expectation
from oracles import bm_exit_moments, catalog, cone_vertex_search, uniform_in_ball

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@contextmanager
def criterion(record_property, label, limit_s=None):
    record_property("criterion", label)
    t0 = time.perf_counter()
    box = {}
    try:
        yield box
    finally:
        box["elapsed"] = time.perf_counter() - t0
        record_property("runtime_s", box["elapsed"])
    if limit_s is not None:
        assert box["elapsed"] < limit_s, f"runtime {box['elapsed']:.1f} s over {limit_s} s"


def gbm(sigmas, x0=0.0):
    cs = SigmaGrid(tuple(sigmas))
    return ScenarioFamily("gbm", cs, family_controls(cs), [x0])


def test_c1_pointmass_exact(record_property):
    with criterion(record_property, "1 pointmass counterexample", 1.0):
        rep = pointmass_run()
    m = rep["metrics"]
    for x, v in zip(m["x"], m["min_tau_open_1"]):
        assert v == (0.0 if x >= 0 else 1.0)
    assert rep["verdict"] == PASS


@pytest.mark.slow
def test_c2_degenerate_gbm_witness(record_property):
    with criterion(record_property, "2 degenerate G-BM witness", 120.0):
        rep = degenerate_gbm_run(dt=1e-4, n_paths=10_000, seed=0)
    m = rep["metrics"]
    print(json.dumps({"witness": m["witness"]["value"], "capacity_by_steps": m["capacity_by_steps"]}))
    assert m["value_at_omega0"] == 1.0
    assert m["witness"]["value"] >= 0.9, rep["failures"]


@pytest.mark.slow
def test_c3_anisotropic_witness(record_property):
    with criterion(record_property, "3 anisotropic 2-D witness", 120.0):
        rep = anisotropic_2d_run(dt=1e-3, n_paths=10_000, seed=0)
    m = rep["metrics"]
    print(json.dumps({"near_capacity": m["near_capacity"], "gap": m["gap"]}))
    assert m["alpha_one_in_omega0"] and m["value_on_omega0"] == 1.0
    assert m["gap"] >= 1 - 2 * 1e-3
    assert m["near_capacity"]["mean"] >= 0.9, rep["failures"]


@pytest.mark.slow
def test_c4_exit_identity(record_property):
    cfg = json.loads((CONFIGS / "exit_identity.json").read_text())
    assert cfg["n_paths"] == 100_000 and cfg["family"]["control_set"]["sigmas"] == [0.5, 0.75, 1.0]
    with criterion(record_property, "4 exit identity", 300.0):
        rep = run_exit_identity(gbm((0.5, 0.75, 1.0), x0=cfg["family"]["x0"][0]), Interval(a=-1.0, b=1.0),
                                4.0, [1e-2, 1e-3, 1e-4], 100_000, cfg["seed"],
                                params=ConditionParams(1.0, 1.0), d_max=0.05)
    m = rep["metrics"]
    print(json.dumps({"D": m["D"], "se": m["std_error"], "C": m["fitted_C_sqrt_dt"]}))
    assert rep["hypotheses"]["passed"]
    assert m["strictly_decreasing"] and m["nonincreasing_within_se"]
    assert m["D"][-1] <= 0.05
    assert rep["verdict"] == PASS


@pytest.mark.slow
def test_c5_moment_bound(record_property):
    with criterion(record_property, "5 second-moment bound", 180.0):
        rep = run_moment_bound(gbm((1.0,)), Interval(a=-1.0, b=1.0), 1.0, 1.0, dt=1e-4, t_big=20.0,
                               n_paths=100_000, seed=7)
    m = rep["metrics"]
    print(json.dumps({k: m[k] for k in ("bound", "estimate", "std_error")} | {"mean": m["first_moment"]["value"]}))
    assert m["bound"] == pytest.approx(math.exp(8), rel=1e-12)
    assert round(m["bound"], 2) == 2980.96
    assert m["estimate"] + 3 * m["std_error"] <= m["bound"]
    mean_tau, _ = bm_exit_moments(1.0)
    assert abs(m["first_moment"]["value"] - mean_tau) <= 0.02 * mean_tau
    assert rep["verdict"] == PASS


def test_c6_barrier_algebra(record_property):
    rng = np.random.default_rng(6)
    with criterion(record_property, "6 barrier algebra", 5.0):
        for _ in range(1000):
            d = int(rng.integers(1, 4))
            r = rng.uniform(0.05, 2)
            R = 2 * r + rng.uniform(0, 5)
            lam, eps = rng.uniform(1e-3, 1), rng.uniform(1e-3, 5)
            z = rng.normal(size=d)
            bp = BarrierParams(tuple(z), r, R, 1.0, lam, eps)
            ks = barrier_threshold(bp)
            at = BarrierParams(bp.z, r, R, ks, lam, eps)
            scale = 2 * lam * ks * r ** 2 * eps + eps + 2 * (R + r)
            assert abs(barrier_coefficient(at)) <= 8 * np.finfo(float).eps * scale
            k = ks * rng.uniform(0.1, 10)
            y = z + rng.normal(size=d) * rng.uniform(0.1, 2) / math.sqrt(k)
            chk = barrier_derivative_check(BarrierParams(tuple(z), r, R, k, lam, eps), y)
            assert chk.passed, chk


def test_c7_condition_truth_table(record_property):
    q = Interval(a=-1.0, b=1.0)
    grid = TimeGrid(1.0, 1000)
    with criterion(record_property, "7 condition truth table"):
        cs = ScalarVolInterval(0.2, 1.0, 3)
        fam = ScenarioFamily("gbm", cs, family_controls(cs, "one_switch", steps=grid.steps), [0.0])
        for law in fam.laws:
            for rec in fam.simulate(law, grid, 4, 0).records():
                assert check_conditions(rec, ConditionParams(1.0, 1.0), domain=q).passed

        pm = PointMass((0.0, 0.5, -0.5))
        fam = ScenarioFamily("pointmass", pm, family_controls(pm), [0.0])
        for law in fam.laws:
            v = check_conditions(fam.simulate(law, grid, 1, 0).record(0), ConditionParams(1.0, 1.0))
            assert (v.passed, v.failed_clause, v.first_failure_step) == (False, "b", 0)

        cs = AnisotropicDiag2((0.0, 1.0))
        fam = ScenarioFamily("gbm", cs, family_controls(cs), [0.0, 0.5])
        for lam in (1e-3, 1e-2, 1e-1, 0.5, 1.0):
            for law in fam.laws:
                for rec in fam.simulate(law, grid, 4, 0).records():
                    v = check_conditions(rec, ConditionParams(lam, 1.0))
                    assert (v.passed, v.failed_clause, v.first_failure_step) == (False, "a", 0)


def test_c8_partition_of_unity(record_property):
    rng = np.random.default_rng(8)
    taus = rng.uniform(0, 1, 100)
    with criterion(record_property, "8 partition of unity", 10.0):
        gaps = []
        for k in range(4, 13):
            scheme = PartitionScheme(k)
            scheme.check()
            reps = [partition_indicator_approx(scheme, t, check=False) for t in taus]
            assert max(r.identity_max_error for r in reps) <= 1e-12
            assert all(r.l1_gap <= 3 * 2.0 ** -k for r in reps)
            gaps.append([r.l1_gap for r in reps])
    gaps = np.array(gaps)
    ratios = gaps[:-1] / gaps[1:]
    assert np.all((ratios >= 1 / 6) & (ratios <= 6))


def _synthetic_family(rng):
    n_laws = int(rng.integers(1, 6))
    grid = TimeGrid(1.0, 1)
    fam = []
    for k in range(n_laws):
        n = int(rng.integers(5, 60))
        fam.append(PathBatch(grid, np.zeros((n, 2, 1)), np.full(n, k), np.arange(n)))
    return fam


def _by_law(table):
    return lambda b: table[int(b.law_ids[0])]


def test_c9_estimator_laws_and_determinism(record_property, tmp_path):
    rng = np.random.default_rng(9)
    with criterion(record_property, "9 estimator laws and thread determinism"):
        for case in range(1000):
            fam = _synthetic_family(rng)
            scale = 10.0 ** rng.uniform(-3, 3)
            F = {b.law_ids[0]: rng.standard_t(3, len(b)) * scale for b in fam}
            G = {b.law_ids[0]: rng.normal(rng.uniform(-1, 1), 1, len(b)) * scale for b in fam}
            c = rng.uniform(-100, 100)
            ef, eg = upper_expectation(_by_law(F), fam).value, upper_expectation(_by_law(G), fam).value
            tol = 1e-12 * (abs(ef) + abs(eg) + abs(c) + scale)
            assert upper_expectation(_by_law({k: F[k] + G[k] for k in F}), fam).value <= ef + eg + tol
            H = {k: F[k] + np.abs(G[k]) for k in F}
            assert ef <= upper_expectation(_by_law(H), fam).value
            assert abs(upper_expectation(_by_law({k: F[k] + c for k in F}), fam).value - (ef + c)) <= tol
            top = max(float(np.max(v)) for v in F.values())
            levels = np.concatenate([np.linspace(-3 * scale, top, 8), [top]])
            ups = [upper_expectation(_by_law({k: np.minimum(F[k], t) for k in F}), fam).value for t in levels]
            assert all(a <= b for a, b in zip(ups, ups[1:]))
            assert ups[-1] == ef

        for name in ("simulate", "exit_stats", "qc_probe", "check_conditions", "exit_identity"):
            cfg = json.loads((CONFIGS / f"{name}.json").read_text())
            if "n_paths" in cfg:
                cfg["n_paths"] = min(cfg["n_paths"], 500)
            if "dt_levels" in cfg.get("grid", {}):
                cfg["grid"]["dt_levels"] = [0.01, 0.001]
            path = tmp_path / f"{name}.json"
            path.write_text(json.dumps(cfg))
            outs = []
            for threads in (1, 4):
                out = tmp_path / f"{name}-{threads}"
                assert cli.main([cfg["experiment"], "--config", str(path), "--out", str(out),
                                 "--threads", str(threads)]) in (0, 1)
                outs.append(out)
            for f in outs[0].iterdir():
                assert f.read_bytes() == (outs[1] / f.name).read_bytes(), (name, f.name)


def test_c10_geometry(record_property):
    rng = np.random.default_rng(10)
    with criterion(record_property, "10 exterior-ball geometry"):
        for name, q in catalog().items():
            assert q.exterior_ball().satisfied_everywhere is True, name
            xs = q.sample_boundary(rng, 10_000)
            assert np.all(q.regions(xs) == Region.ON_BOUNDARY) or np.all(np.abs(q.signed_distance(xs)) < 1e-9), name
            centers, radii = [], []
            for x in xs:
                v = q.exterior_ball(x, tol=1e-9)
                assert v.satisfied_at_point, name
                centers.append(v.witness.center)
                radii.append(v.witness.radius)
            centers, radii = np.array(centers), np.array(radii)
            assert np.allclose(np.linalg.norm(centers - xs, axis=1), radii, rtol=1e-9, atol=1e-9), name
            # 32 uniform points in every witness ball; none may fall in Q
            pts = np.concatenate([uniform_in_ball(rng, c, r, 32) for c, r in zip(centers, radii)])
            assert not np.any(q.regions(pts) == Region.IN_Q), name

        cone = ConeTest()
        assert cone.exterior_ball(np.zeros(2)).satisfied_at_point is False
        assert cone_vertex_search() == []
