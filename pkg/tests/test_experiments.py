import math

import numpy as np
import pytest

from nlexit.domains import Interval, LowerRay
from nlexit.exits import exit_sample_from_states
from nlexit.families import PointMass, ScenarioFamily, SigmaGrid, family_controls
from nlexit.functionals import PathBatch, clamped_exit, exit_approximant
from nlexit.lab.conditions import ConditionParams
from nlexit.lab.counterexamples import anisotropic_2d_run, counterexample_run, degenerate_gbm_run, pointmass_run
from nlexit.lab.experiments import (exit_identity_experiment, family_hypotheses, qc_probe, run_exit_identity,
                                    run_moment_bound)
from nlexit.paths import TimeGrid
from nlexit.reports import FAIL, HYPOTHESES_VIOLATED, INFO, PASS
from oracles import walk_stays_two_steps


def gbm(sigmas, x0=0.0):
    cs = SigmaGrid(tuple(sigmas))
    return ScenarioFamily("gbm", cs, family_controls(cs), [x0])


def test_line_path_gap_is_one_step():
    # x(t) = t - 1/2 touches 0 at a node; the closure is left one node later
    q = LowerRay(0.0)
    levels = []
    for k in (4, 6, 8):
        grid = TimeGrid(1.0, 2 ** k)
        states = (grid.times() - 0.5)[None, :, None]
        levels.append((grid.dt, [exit_sample_from_states(states, grid, q, 0, [0])]))
    rep = exit_identity_experiment(levels, q, 1.0, hypotheses={"checked": [], "passed": True})
    assert rep["metrics"]["D"] == [2.0 ** -4, 2.0 ** -6, 2.0 ** -8]
    assert rep["verdict"] == PASS
    assert rep["metrics"]["fitted_C_sqrt_dt"] > 0


def test_pointmass_gap_is_clamp_and_labelled():
    cs = PointMass((0.0,))
    fam = ScenarioFamily("pointmass", cs, family_controls(cs), [0.0])
    rep = run_exit_identity(fam, LowerRay(0.0), 1.0, [0.1, 0.01], 1, 0)
    assert rep["metrics"]["D"] == [1.0, 1.0]
    assert rep["verdict"] == HYPOTHESES_VIOLATED and rep["failures"] == []


def test_exit_identity_small_run_decreases():
    rep = run_exit_identity(gbm((0.5, 1.0), x0=1.0), Interval(a=-1.0, b=1.0), 2.0, [1e-2, 1e-3], 2000, 0)
    D = rep["metrics"]["D"]
    assert rep["hypotheses"]["passed"]
    assert D[1] < D[0] and rep["verdict"] == PASS


def test_family_hypotheses_per_law():
    hyp = family_hypotheses(gbm((0.0, 1.0)), Interval(a=-1.0, b=1.0), TimeGrid(1.0, 50), n_check=4)
    assert hyp["per_law"][0]["passed"] is False
    assert hyp["per_law"][0]["failure"]["failed_clause"] == "b"
    assert hyp["per_law"][1]["passed"] is True and hyp["passed"] is False


def test_moment_bound_small():
    rep = run_moment_bound(gbm((1.0,)), Interval(a=-1.0, b=1.0), 1.0, 1.0, dt=1e-3, t_big=10.0,
                           n_paths=4000, seed=1)
    m = rep["metrics"]
    assert m["bound"] == pytest.approx(math.exp(8))
    # E[tau^2] = 5/3 for standard BM on (-1, 1) from 0; grid exits are slightly late
    assert abs(m["estimate"] - 5 / 3) < 4 * m["std_error"] + 0.05
    assert rep["verdict"] == PASS


def test_moment_bound_hypothesis_violation():
    rep = run_moment_bound(gbm((0.1,)), Interval(a=-1.0, b=1.0), 1.0, 1.0, dt=1e-2, t_big=1.0,
                           n_paths=100, seed=0)
    assert rep["verdict"] == HYPOTHESES_VIOLATED
    assert rep["hypotheses"]["per_law"][0]["failure"]["failed_clause"] == "moment"
    with pytest.raises(ValueError):
        run_moment_bound(gbm((1.0,)), LowerRay(0.0), 1.0, 1.0, dt=1e-2, t_big=1.0, n_paths=10, seed=0)


def test_qc_probe_shrinking_capacity():
    q = Interval(a=-1.0, b=1.0)
    grid = TimeGrid(1.0, 500)
    fam = [PathBatch(e.grid, e.states, e.law_ids, e.path_index) for e in gbm((0.5, 1.0)).ensembles(grid, 1000, 0)]
    f = clamped_exit(q, 1.0)
    rep = qc_probe(fam, f, [exit_approximant(q, 1.0, n) for n in (1, 16, 256)], 0.05, [0.1, 0.01])
    caps = [r["capacity"] for r in rep["metrics"]["approximants"]]
    assert caps[0] > caps[1] > caps[2]
    assert rep["verdict"] == INFO and len(rep["metrics"]["perturbation"]) == 2


def test_pointmass_counterexample_exact():
    rep = pointmass_run()
    assert rep["verdict"] == PASS
    assert rep["metrics"]["gap"] == 1.0
    assert counterexample_run("pointmass")["metrics"] == rep["metrics"]
    with pytest.raises(ValueError):
        counterexample_run("nope")


def test_degenerate_gbm_small_matches_walk_oracle():
    rep = degenerate_gbm_run(sigmas=(0.0, 0.01), dt=1e-4, n_paths=4000, seed=0)
    m = rep["metrics"]
    assert m["value_at_omega0"] == 1.0
    two = next(r for r in m["capacity_by_steps"] if r["m"] == 2)
    assert abs(two["capacity"] - (1 - walk_stays_two_steps())) < 4 * two["std_error"]
    assert rep["verdict"] == FAIL


def test_anisotropic_small():
    rep = anisotropic_2d_run(alphas=(0.0, 0.9, 1.0), dt=1e-2, n_paths=500, seed=0)
    m = rep["metrics"]
    assert m["alpha_one_in_omega0"] and m["value_on_omega0"] == 1.0
    assert m["near_alpha"] == 0.9
