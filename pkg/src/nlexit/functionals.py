"""Vectorized path functionals.

A functional takes a batch (anything with ``grid`` and ``states`` of shape
``(n, steps+1, d)``) and returns one value per path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domains import Domain
from .exits import clamp_times, first_hits
from .paths import TimeGrid, metric_from_gaps


@dataclass(frozen=True, eq=False)
class PathBatch:
    grid: TimeGrid
    states: np.ndarray
    law_ids: np.ndarray
    path_index: np.ndarray

    def __len__(self):
        return self.states.shape[0]

    @classmethod
    def of(cls, batch, states=None) -> "PathBatch":
        return cls(batch.grid, batch.states if states is None else states, batch.law_ids, batch.path_index)


def named(name: str):
    def deco(fn):
        fn.__name__ = name
        return fn
    return deco


def clamped_exit(q: Domain, clamp: float, closed: bool = False):
    label = f"min(tau_{'closure' if closed else 'open'}, {clamp:g})"

    @named(label)
    def f(batch):
        i_open, i_closed = first_hits(q.regions(batch.states))
        return clamp_times(i_closed if closed else i_open, batch.grid, clamp)

    return f


def endpoint(component: int = 0):
    @named(f"Y_T[{component}]")
    def f(batch):
        return batch.states[:, -1, component]

    return f


def endpoint_square(component: int = 0):
    @named(f"Y_T[{component}]^2")
    def f(batch):
        return batch.states[:, -1, component] ** 2

    return f


def metric_to_constant(point, components=None, n_max: int = 20):
    """rho distance to the constant path at ``point`` (restricted to ``components``)."""
    point = np.atleast_1d(np.asarray(point, dtype=float))

    @named(f"rho(., const {point.tolist()})")
    def f(batch):
        diff = batch.states - point if components is None else batch.states[..., components] - point
        return metric_from_gaps(np.linalg.norm(diff, axis=-1), batch.grid, n_max)

    return f


def sup_norm(components=None):
    @named("sup|Y|")
    def f(batch):
        x = batch.states if components is None else batch.states[..., components]
        return np.linalg.norm(x, axis=-1).max(axis=-1)

    return f


def exit_approximant(q: Domain, t: float, n: float):
    """Continuous surrogate for min(tau_Q, t).

    Integrates min(1, n * (-m_u)^+) over [0, t], where m_u is the running
    max of the signed distance.  Continuous in the sup norm and increasing
    to min(tau_Q, t) as n grows (up to grid quadrature).
    """

    @named(f"soft_exit[n={n:g}]")
    def f(batch):
        sd = np.maximum.accumulate(q.signed_distance(batch.states), axis=-1)
        weight = np.minimum(1.0, n * np.maximum(-sd, 0.0))
        last = batch.grid.last_index_at_or_before(t)
        return weight[:, :last].sum(axis=-1) * batch.grid.dt

    return f
