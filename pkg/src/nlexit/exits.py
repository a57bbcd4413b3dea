"""Exit times from Q and from its closure on grid paths.

Detection is first-node: tau_open is the first grid time at which the path is
not in Q (the boundary counts as exited), tau_closed the first grid time at
which it lies outside the closure.  For transversal crossings the continuous
exit time lies in [tau - dt, tau]; no Brownian-bridge correction is applied.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domains import Domain, Region
from .paths import GridPath, TimeGrid, _check_pair, sup_distance

NO_EXIT = -1
DETECTION_NOTE = "first grid node; true exit time in [tau - dt, tau] for transversal crossings"


class _NotBeforeHorizon:
    """Sentinel for an exit time that did not occur on the simulated window."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NOT_BEFORE_HORIZON"

    def __reduce__(self):
        return (_NotBeforeHorizon, ())


NOT_BEFORE_HORIZON = _NotBeforeHorizon()


def first_hits(regions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First node indices leaving Q and leaving its closure, time axis last.

    Returns ``NO_EXIT`` where no such node exists.
    """
    left_q = regions != Region.IN_Q
    left_closure = regions == Region.IN_CLOSURE_COMPLEMENT
    i_open = np.where(left_q.any(axis=-1), left_q.argmax(axis=-1), NO_EXIT)
    i_closed = np.where(left_closure.any(axis=-1), left_closure.argmax(axis=-1), NO_EXIT)
    return i_open, i_closed


def clamp_times(index: np.ndarray, grid: TimeGrid, clamp: float) -> np.ndarray:
    """``min(tau, clamp)`` from hit indices.

    A path that has not exited by the horizon has tau >= horizon, which pins
    the clamped value only when ``clamp <= horizon``.
    """
    index = np.asarray(index)
    missing = index == NO_EXIT
    if clamp > grid.horizon and missing.any():
        raise ValueError(
            f"clamp={clamp} exceeds horizon={grid.horizon} but {int(missing.sum())} paths "
            "have not exited; min(tau, clamp) is undetermined")
    times = index * grid.horizon / grid.steps
    return np.where(missing, clamp, np.minimum(times, clamp))


@dataclass(frozen=True)
class ExitReport:
    tau_open: float | _NotBeforeHorizon
    tau_closed: float | _NotBeforeHorizon
    hit_index_open: int | None
    hit_index_closed: int | None
    grid_dt: float
    note: str = DETECTION_NOTE

    def clamped(self, clamp: float, horizon: float | None = None) -> tuple[float, float]:
        out = []
        for tau in (self.tau_open, self.tau_closed):
            if tau is NOT_BEFORE_HORIZON:
                if horizon is not None and clamp > horizon:
                    raise ValueError("clamp beyond horizon on a path that has not exited")
                out.append(clamp)
            else:
                out.append(min(tau, clamp))
        return out[0], out[1]


def exit_times(p: GridPath, q: Domain) -> ExitReport:
    if p.dim != q.dim:
        raise ValueError(f"path dim {p.dim} != domain dim {q.dim}")
    i_open, i_closed = (int(i) for i in first_hits(q.regions(p.states)))

    def as_time(i):
        return NOT_BEFORE_HORIZON if i == NO_EXIT else p.grid.time(i)

    return ExitReport(
        tau_open=as_time(i_open),
        tau_closed=as_time(i_closed),
        hit_index_open=None if i_open == NO_EXIT else i_open,
        hit_index_closed=None if i_closed == NO_EXIT else i_closed,
        grid_dt=p.grid.dt,
    )


def stopped_path(p: GridPath, tau: float) -> GridPath:
    """Freeze the path at the last node at or before ``tau``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    k = p.grid.last_index_at_or_before(tau)
    states = np.array(p.states)
    states[k + 1:] = states[k]
    return GridPath(p.grid, states)


@dataclass(frozen=True)
class ProbeRow:
    delta: float
    v_lsc: float
    v_usc: float


def semicontinuity_probe(base: GridPath, q: Domain, bumps: Sequence[GridPath],
                         clamp: float) -> list[ProbeRow]:
    """Semicontinuity defects of the clamped exit times under perturbations.

    ``v_lsc`` measures how far tau_Q drops below its base value and ``v_usc``
    how far tau_closed rises above it.
    """
    if clamp > base.grid.horizon:
        raise ValueError("clamp must not exceed the horizon")
    t_open, t_closed = exit_times(base, q).clamped(clamp)
    rows = []
    for bump in bumps:
        _check_pair(base, bump)
        moved = GridPath(base.grid, base.states + bump.states)
        m_open, m_closed = exit_times(moved, q).clamped(clamp)
        rows.append(ProbeRow(
            delta=sup_distance(base, moved),
            v_lsc=max(0.0, t_open - m_open),
            v_usc=max(0.0, m_closed - t_closed),
        ))
    return rows


@dataclass(frozen=True, eq=False)
class ExitSample:
    """Exit indices for a batch of paths simulated under one law."""

    law_id: int
    grid: TimeGrid
    path_index: np.ndarray
    idx_open: np.ndarray
    idx_closed: np.ndarray

    def __len__(self):
        return self.path_index.size

    def clamped_open(self, clamp: float) -> np.ndarray:
        return clamp_times(self.idx_open, self.grid, clamp)

    def clamped_closed(self, clamp: float) -> np.ndarray:
        return clamp_times(self.idx_closed, self.grid, clamp)

    @classmethod
    def concat(cls, parts: Sequence["ExitSample"]) -> "ExitSample":
        first = parts[0]
        return cls(
            first.law_id, first.grid,
            np.concatenate([p.path_index for p in parts]),
            np.concatenate([p.idx_open for p in parts]),
            np.concatenate([p.idx_closed for p in parts]),
        )


def exit_sample_from_states(states: np.ndarray, grid: TimeGrid, q: Domain,
                            law_id: int, path_index) -> ExitSample:
    """Exit indices for ``states`` of shape ``(n, steps+1, d)``."""
    i_open, i_closed = first_hits(q.regions(states))
    return ExitSample(law_id, grid, np.asarray(path_index), i_open, i_closed)


def write_exit_csv(samples: Sequence[ExitSample], clamp: float, fh) -> None:
    writer = csv.writer(fh)
    writer.writerow(["law_id", "path_index", "tau_open", "tau_closed", "clamped",
                     "hit_index_open", "hit_index_closed"])
    for s in samples:
        clamped = s.clamped_open(clamp)
        for j in range(len(s)):
            io, ic = int(s.idx_open[j]), int(s.idx_closed[j])
            writer.writerow([
                s.law_id, int(s.path_index[j]),
                "inf" if io == NO_EXIT else repr(s.grid.time(io)),
                "inf" if ic == NO_EXIT else repr(s.grid.time(ic)),
                repr(float(clamped[j])),
                "" if io == NO_EXIT else io,
                "" if ic == NO_EXIT else ic,
            ])
