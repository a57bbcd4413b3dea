"""Grid paths on [0, T] and the path-space metric."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np


class PathMismatchError(ValueError):
    """Two paths cannot be compared: different grids or dimensions."""

    def __init__(self, what: str, left, right):
        super().__init__(f"{what} mismatch: {left!r} != {right!r}")
        self.what = what
        self.left = left
        self.right = right


@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    steps: int

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")
        object.__setattr__(self, "steps", int(self.steps))
        object.__setattr__(self, "horizon", float(self.horizon))

    @classmethod
    def from_dt(cls, horizon: float, dt: float) -> "TimeGrid":
        steps = int(round(horizon / dt))
        if steps < 1 or abs(steps * dt - horizon) > 1e-9 * horizon:
            raise ValueError(f"dt={dt} does not divide horizon={horizon}")
        return cls(horizon, steps)

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    def times(self) -> np.ndarray:
        # k*T/n keeps integer multiples exact when T is
        return np.arange(self.steps + 1) * self.horizon / self.steps

    def time(self, index: int) -> float:
        return index * self.horizon / self.steps

    def last_index_at_or_before(self, t: float) -> int:
        """Index of the last node with time <= t (clipped to the grid)."""
        if t >= self.horizon:
            return self.steps
        return int(np.searchsorted(self.times(), t, side="right")) - 1


@dataclass(frozen=True, eq=False)
class GridPath:
    grid: TimeGrid
    states: np.ndarray

    def __post_init__(self):
        states = np.array(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if states.ndim != 2 or states.shape[0] != self.grid.steps + 1:
            raise ValueError(
                f"states must have shape ({self.grid.steps + 1}, d), got {states.shape}")
        if not np.all(np.isfinite(states)):
            raise ValueError("path states must be finite")
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __eq__(self, other):
        if not isinstance(other, GridPath):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.states, other.states)

    @classmethod
    def constant(cls, grid: TimeGrid, value) -> "GridPath":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(grid, np.broadcast_to(value, (grid.steps + 1, value.size)))

    @classmethod
    def from_function(cls, grid: TimeGrid, fn) -> "GridPath":
        """Sample ``fn(t)`` (scalar or vector valued) at every node."""
        return cls(grid, np.array([np.atleast_1d(fn(t)) for t in grid.times()]))


def _check_pair(a: GridPath, b: GridPath):
    if a.grid != b.grid:
        raise PathMismatchError("grid", a.grid, b.grid)
    if a.dim != b.dim:
        raise PathMismatchError("dim", a.dim, b.dim)


class MetricValue(NamedTuple):
    value: float
    tail_bound: float


def metric_from_gaps(gaps: np.ndarray, grid: TimeGrid, n_max: int = 20) -> np.ndarray:
    """Truncated path metric from pointwise gaps ``|a_t - b_t|``.

    ``gaps`` has the time axis last; leading axes are batched.  Terms for
    N beyond the horizon reuse the sup over the whole window.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    running = np.maximum.accumulate(gaps, axis=-1)
    ends = [grid.last_index_at_or_before(float(n)) for n in range(1, n_max + 1)]
    weights = 0.5 ** np.arange(1, n_max + 1)
    terms = np.minimum(running[..., ends], 1.0)
    return terms @ weights


def path_metric(a: GridPath, b: GridPath, n_max: int = 20) -> MetricValue:
    """Truncated rho(a, b) = sum_N 2^-N (sup_{[0,N]} |a-b| ^ 1).

    The dropped tail is at most 2^-n_max and is returned with the value.
    """
    _check_pair(a, b)
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    gaps = np.linalg.norm(a.states - b.states, axis=1)
    return MetricValue(float(metric_from_gaps(gaps, a.grid, n_max)), 0.5 ** n_max)


def sup_distance(a: GridPath, b: GridPath, up_to: float | None = None) -> float:
    _check_pair(a, b)
    up_to = a.grid.horizon if up_to is None else up_to
    if not 0 <= up_to <= a.grid.horizon:
        raise ValueError(f"up_to={up_to} outside [0, {a.grid.horizon}]")
    end = a.grid.last_index_at_or_before(up_to)
    return float(np.linalg.norm(a.states[:end + 1] - b.states[:end + 1], axis=1).max())


def perturb(p: GridPath, bump: GridPath) -> GridPath:
    _check_pair(p, bump)
    return GridPath(p.grid, p.states + bump.states)


# --- serialization -----------------------------------------------------------

def write_ndjson(paths: Iterable[tuple[int, GridPath]], fh, law_id: int | None = None) -> None:
    """One JSON object per path: index, t0, dt, states (and law_id when given)."""
    for index, path in paths:
        obj = {"index": int(index), "t0": 0.0, "dt": path.grid.dt, "states": path.states.tolist()}
        if law_id is not None:
            obj["law_id"] = int(law_id)
        fh.write(json.dumps(obj) + "\n")


def read_ndjson(fh) -> list[tuple[int, GridPath]]:
    out = []
    for line in fh:
        if not line.strip():
            continue
        obj = json.loads(line)
        states = np.asarray(obj["states"], dtype=float)
        steps = states.shape[0] - 1
        grid = TimeGrid(steps * obj["dt"], steps)
        out.append((obj["index"], GridPath(grid, states)))
    return out


def write_csv(paths: Iterable[tuple[int, GridPath]], fh) -> None:
    """Long format: one row per (path, node)."""
    writer = None
    for index, path in paths:
        if writer is None:
            writer = csv.writer(fh)
            writer.writerow(["index", "t"] + [f"x{j}" for j in range(path.dim)])
        for t, x in zip(path.grid.times(), path.states):
            writer.writerow([index, repr(float(t))] + [repr(float(v)) for v in x])
