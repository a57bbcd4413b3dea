"""Exit-identity, second-moment and quasi-continuity experiments."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from ..domains import Domain
from ..exits import NO_EXIT, ExitSample, exit_times
from ..families import ScenarioFamily
from ..functionals import PathBatch
from ..paths import TimeGrid
from ..reports import FAIL, HYPOTHESES_VIOLATED, INFO, PASS, make_report
from ..upper import law_stat, reduce_laws, upper_capacity
from .barriers import moment_bound_params
from .conditions import ConditionParams, check_conditions, check_moment_hypothesis

QS_NOTE = ("q.s. statements are checked over a finite family of laws; a zero failure "
           "frequency is evidence, not a proof, that the exceptional set is polar")


def family_hypotheses(family: ScenarioFamily, q: Domain, grid: TimeGrid,
                      params: ConditionParams | None = None, n_check: int = 32,
                      seed: int = 0) -> dict:
    """Exterior ball for Q and the step conditions on sampled records of every law."""
    params = params or ConditionParams(lam=1.0 / q.dim, epsilon=1.0)
    ext = q.exterior_ball().satisfied_everywhere
    per_law = {}
    ok = ext is True
    for law in family.laws:
        ens = family.simulate(law, grid, n_check, seed)
        first_bad = None
        for rec in ens.records():
            rep = exit_times(rec.path, q)
            up_to = grid.horizon if rep.hit_index_closed is None else rep.tau_closed
            v = check_conditions(rec, params, up_to, domain=q)
            if not v.passed:
                first_bad = v
                break
        per_law[law.law_id] = {"passed": first_bad is None,
                               "failure": None if first_bad is None else first_bad.to_json()}
        ok = ok and first_bad is None
    return {
        "checked": ["exterior_ball", "nondegeneracy", "controllability"],
        "passed": bool(ok),
        "exterior_ball": ext,
        "params": {"lambda": params.lam, "epsilon": params.epsilon},
        "per_law": per_law,
    }


def exit_gap(samples: Sequence[ExitSample], clamp: float):
    """Upper expectation of min(tau_closure, clamp) - min(tau_open, clamp)."""
    stats = [law_stat(s.law_id, s.clamped_closed(clamp) - s.clamped_open(clamp)) for s in samples]
    return reduce_laws(stats, f"min(tau_closure,{clamp:g}) - min(tau_open,{clamp:g})")


def exit_identity_experiment(levels: Sequence[tuple[float, Sequence[ExitSample]]], q: Domain,
                             clamp: float, *, hypotheses: dict | None = None,
                             d_max: float | None = None, k_se: float = 3.0) -> dict:
    """D(dt) across grid levels, coarsest first.

    Passing requires strictly decreasing point estimates, no increase beyond
    ``k_se`` standard errors, and D at the finest level below ``d_max`` when
    given.
    """
    if hypotheses is None:
        ext = q.exterior_ball().satisfied_everywhere
        hypotheses = {"checked": ["exterior_ball"], "passed": ext is True, "exterior_ball": ext}
    levels = sorted(levels, key=lambda lv: -lv[0])
    ests = [(dt, exit_gap(samples, clamp)) for dt, samples in levels]
    D = [e.value for _, e in ests]
    se = [e.std_error for _, e in ests]
    dts = np.array([dt for dt, _ in ests])
    strictly = all(D[i + 1] < D[i] for i in range(len(D) - 1))
    within = all(D[i + 1] <= D[i] + k_se * (se[i] + se[i + 1]) for i in range(len(D) - 1))
    root = np.sqrt(dts)
    fitted_C = float(np.dot(D, root) / np.dot(root, root))
    failures = []
    if not strictly:
        failures.append("D(dt) is not strictly decreasing under refinement")
    if not within:
        failures.append(f"D(dt) increases by more than {k_se} standard errors")
    if d_max is not None and D[-1] > d_max:
        failures.append(f"D(finest)={D[-1]:.6g} exceeds {d_max}")
    if not hypotheses["passed"]:
        verdict = HYPOTHESES_VIOLATED
    else:
        verdict = PASS if not failures else FAIL
    return make_report(
        "exit-identity",
        hypotheses=hypotheses,
        metrics={
            "dt": dts.tolist(),
            "D": D,
            "std_error": se,
            "argmax_law": [e.argmax_law for _, e in ests],
            "per_level": [e.to_json() for _, e in ests],
            "fitted_C_sqrt_dt": fitted_C,
            "strictly_decreasing": strictly,
            "nonincreasing_within_se": within,
        },
        tolerances={"k_se": k_se, "d_max": d_max},
        verdict=verdict,
        failures=failures if hypotheses["passed"] else [],
        notes=[QS_NOTE, "fitted rate is descriptive only",
               "first-node exit detection; no bridge correction"],
    )


def run_exit_identity(family: ScenarioFamily, q: Domain, clamp: float, dt_levels: Sequence[float],
                      n_paths: int, seed: int, *, params: ConditionParams | None = None,
                      n_check: int = 32, d_max: float | None = None, threads: int = 1) -> dict:
    coarse = TimeGrid.from_dt(clamp, max(dt_levels))
    hyp = family_hypotheses(family, q, coarse, params, n_check, seed)
    levels = []
    for dt in dt_levels:
        grid = TimeGrid.from_dt(clamp, dt)
        levels.append((dt, [family.exit_sample(law, grid, q, n_paths, seed, threads) for law in family.laws]))
    return exit_identity_experiment(levels, q, clamp, hypotheses=hyp, d_max=d_max)


def run_moment_bound(family: ScenarioFamily, q: Domain, lam: float, epsilon: float, *,
                     component: int = 0, dt: float, t_big: float, n_paths: int, seed: int,
                     n_check: int = 16, threads: int = 1) -> dict:
    """Monte Carlo estimate of the upper second moment of the closure exit time against 4 C_h^2."""
    if not q.bounded:
        raise ValueError("the second-moment bound needs a bounded domain")
    mp = moment_bound_params(q, lam, epsilon, component)
    grid = TimeGrid.from_dt(t_big, dt)
    per_law_hyp = {}
    for law in family.laws:
        ens = family.simulate(law, grid, n_check, seed)
        verdict = None
        for rec in ens.records():
            rep = exit_times(rec.path, q)
            up_to = grid.horizon if rep.hit_index_closed is None else rep.tau_closed
            v = check_moment_hypothesis(rec, lam, epsilon, component, up_to)
            if not v.passed:
                verdict = v
                break
        per_law_hyp[law.law_id] = {"passed": verdict is None,
                                   "failure": None if verdict is None else verdict.to_json()}
    hyp_ok = all(v["passed"] for v in per_law_hyp.values())
    sq_stats, mean_stats, unexited = [], [], {}
    for law in family.laws:
        s = family.exit_sample(law, grid, q, n_paths, seed, threads)
        tau = s.clamped_closed(t_big)
        sq_stats.append(law_stat(law.law_id, tau ** 2))
        mean_stats.append(law_stat(law.law_id, tau))
        unexited[law.law_id] = float(np.mean(s.idx_closed == NO_EXIT))
    second = reduce_laws(sq_stats, f"min(tau_closure,{t_big:g})^2")
    first = reduce_laws(mean_stats, f"min(tau_closure,{t_big:g})")
    holds = second.value + 3 * second.std_error <= mp.bound
    failures = [] if holds else [f"estimate + 3 SE = {second.value + 3 * second.std_error:.6g} exceeds bound {mp.bound:.6g}"]
    if hyp_ok:
        verdict = PASS if holds else FAIL
    else:
        verdict = HYPOTHESES_VIOLATED
    return make_report(
        "moment-bound",
        hypotheses={"checked": ["bounded_domain", "lam*dA + d<M> >= eps*dt"], "passed": hyp_ok,
                    "per_law": per_law_hyp},
        metrics={
            "beta": mp.beta,
            "C_h": mp.C_h,
            "bound": mp.bound,
            "estimate": second.value,
            "std_error": second.std_error,
            "argmax_law": second.argmax_law,
            "slack_ratio": mp.bound / second.value if second.value > 0 else math.inf,
            "second_moment": second.to_json(),
            "first_moment": first.to_json(),
            "unexited_fraction": unexited,
        },
        tolerances={"k_se": 3.0, "dt": dt, "t_big": t_big},
        verdict=verdict,
        failures=failures if hyp_ok else [],
        notes=["beta is the smallest value allowed by the exponential barrier",
               "paths still inside the closure at t_big are counted at t_big"],
    )


def qc_probe(fam: Sequence, functional: Callable, approximants: Sequence[Callable], eps: float,
             deltas: Sequence[float] = (), *, shape: Callable | None = None) -> dict:
    """Capacity diagnostics for the quasi-continuity of ``functional``.

    For each approximant, estimates c(|f_n - f| > eps).  For each delta,
    every path is shifted by +/- delta along each coordinate (``shape`` can
    replace the constant bump by a time profile of sup-norm one), and the
    capacity of paths whose functional moves by more than ``eps`` is
    reported.
    """
    approx_rows = []
    for n, fn in enumerate(approximants):
        est = upper_capacity(lambda b, fn=fn: np.abs(fn(b) - functional(b)) > eps, fam,
                             f"|f_{n} - f| > {eps:g}")
        approx_rows.append({"index": n, "capacity": est.value, "std_error": est.std_error,
                            "argmax_law": est.argmax_law})
    pair_rows = []
    for delta in deltas:
        def moved(batch, delta=delta):
            base = functional(batch)
            worst = np.zeros(len(batch))
            d = batch.states.shape[2]
            profile = np.ones(batch.grid.steps + 1) if shape is None else shape(batch.grid.times())
            for j in range(d):
                for sign in (1.0, -1.0):
                    bump = np.zeros((batch.grid.steps + 1, d))
                    bump[:, j] = sign * delta * profile
                    shifted = PathBatch.of(batch, batch.states + bump)
                    worst = np.maximum(worst, np.abs(functional(shifted) - base))
            return worst > eps

        est = upper_capacity(moved, fam, f"jump > {eps:g} within {delta:g}")
        pair_rows.append({"delta": delta, "rho_bound": delta, "sup_distance": delta, "capacity": est.value,
                          "std_error": est.std_error, "argmax_law": est.argmax_law})
    return make_report(
        "qc-probe",
        hypotheses={"checked": [], "passed": True},
        metrics={"approximants": approx_rows, "perturbation": pair_rows,
                 "functional": getattr(functional, "__name__", "")},
        tolerances={"eps": eps},
        verdict=INFO,
        notes=["quasi-continuity cannot be certified from samples; the curves are consistency evidence",
               QS_NOTE],
    )
