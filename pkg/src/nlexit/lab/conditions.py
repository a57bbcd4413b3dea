"""Step-by-step checks of the non-degeneracy and controllability conditions.

Per grid step with quadratic-variation increment ``q`` and finite-variation
increment ``a``:

  (a) q - lambda * tr(q) * I is positive semidefinite
  (b) tr(q) > 0
  (c) tr(q) >= epsilon * |a|_1

In one dimension (c) has one-sided replacements: for Q = (-inf, a) it
becomes ``q >= -epsilon * a`` and for Q = (a, inf) ``q >= epsilon * a``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..domains import Domain, HalfSpace, LowerRay

PSD_TOL = 1e-12


@dataclass(frozen=True)
class ConditionParams:
    lam: float
    epsilon: float

    def __post_init__(self):
        if not (self.lam > 0 and self.epsilon > 0):
            raise ValueError("lambda and epsilon must be positive")


@dataclass(frozen=True)
class ConditionVerdict:
    passed: bool
    steps_checked: int
    first_failure_step: int | None = None
    failed_clause: str | None = None
    controllability: str = "two_sided"

    def to_json(self):
        return dict(vars(self))


def controllability_mode(q: Domain | None) -> str:
    """Which clause (c) applies for the domain."""
    if q is None or q.dim != 1:
        return "two_sided"
    if isinstance(q, LowerRay):
        return "lower_ray"
    if isinstance(q, HalfSpace):
        return "lower_ray" if q.normal[0] > 0 else "upper_ray"
    return "two_sided"


def clause_table(qv: np.ndarray, fv: np.ndarray, params: ConditionParams,
                 mode: str = "two_sided", tol: float = PSD_TOL) -> np.ndarray:
    """Boolean (steps, 3) table of clauses (a), (b), (c) per step."""
    d = qv.shape[-1]
    tr = np.trace(qv, axis1=-2, axis2=-1)
    shifted = qv - params.lam * tr[..., None, None] * np.eye(d)
    a_ok = np.linalg.eigvalsh(shifted).min(axis=-1) >= -tol
    b_ok = tr > 0
    if mode == "lower_ray":
        c_ok = tr >= -params.epsilon * fv[..., 0]
    elif mode == "upper_ray":
        c_ok = tr >= params.epsilon * fv[..., 0]
    else:
        c_ok = tr >= params.epsilon * np.abs(fv).sum(axis=-1)
    return np.stack([a_ok, b_ok, c_ok], axis=-1)


def check_conditions(rec, params: ConditionParams, up_to: float | None = None,
                     domain: Domain | None = None, tol: float = PSD_TOL) -> ConditionVerdict:
    """Check the conditions on every step that starts at or before ``up_to``."""
    grid = rec.path.grid
    up_to = grid.horizon if up_to is None else up_to
    last = min(grid.steps - 1, grid.last_index_at_or_before(up_to))
    mode = controllability_mode(domain)
    table = clause_table(rec.qv_inc[:last + 1], rec.fv_inc[:last + 1], params, mode, tol)
    bad = np.flatnonzero(~table.all(axis=1))
    if bad.size == 0:
        return ConditionVerdict(True, last + 1, controllability=mode)
    step = int(bad[0])
    clause = "abc"[int(np.flatnonzero(~table[step])[0])]
    return ConditionVerdict(False, last + 1, step, clause, mode)


def check_moment_hypothesis(rec, lam: float, epsilon: float, component: int = 0,
                            up_to: float | None = None, tol: float = PSD_TOL) -> ConditionVerdict:
    """lam * dA^l + d<M^l> >= epsilon * dt on every step up to ``up_to``."""
    grid = rec.path.grid
    up_to = grid.horizon if up_to is None else up_to
    last = min(grid.steps - 1, grid.last_index_at_or_before(up_to))
    lhs = lam * rec.fv_inc[:last + 1, component] + rec.qv_inc[:last + 1, component, component]
    bad = np.flatnonzero(lhs < epsilon * grid.dt * (1 - tol))
    if bad.size == 0:
        return ConditionVerdict(True, last + 1, controllability="moment")
    return ConditionVerdict(False, last + 1, int(bad[0]), "moment", "moment")
