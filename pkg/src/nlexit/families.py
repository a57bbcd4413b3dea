"""Control sets, scheduled control laws and path simulation.

A family of laws is represented by finitely many piecewise-constant control
schedules.  Maxima over such a family are lower bounds for the supremum over
all laws with quadratic-variation density in the control set.

Simulated ensembles keep the semimartingale ledger: martingale increments,
finite-variation increments and the model quadratic variation per step
(``gamma * dt``, not the realized square).  States are built by sequential
addition ``X[i+1] = X[i] + (dM[i] + dA[i])``.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .domains import Domain, Region
from .exits import NO_EXIT, ExitSample, first_hits
from .paths import GridPath, TimeGrid
from .rng import BLOCK, gaussian_steps

PSD_TOL = 1e-12
PATH_CHUNK = 512
STREAM_CHUNK = 4096


class ControlError(ValueError):
    pass


def check_psd(m: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.shape[0] != m.shape[1]:
        raise ControlError(f"control matrix must be square, got {m.shape}")
    if not np.allclose(m, m.T, atol=tol, rtol=0):
        raise ControlError("control matrix must be symmetric")
    if np.linalg.eigvalsh(m).min() < -tol:
        raise ControlError("control matrix must be positive semidefinite")
    return m


def psd_factor(gamma: np.ndarray) -> np.ndarray:
    """L with L @ L.T == gamma; eigen fallback for singular gamma."""
    try:
        return np.linalg.cholesky(gamma)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(gamma)
        if w.min() < -PSD_TOL:
            raise ControlError("control matrix is not positive semidefinite")
        return v * np.sqrt(np.clip(w, 0.0, None))


def _apply_factor(xi: np.ndarray, L: np.ndarray) -> np.ndarray:
    # explicit column sums keep the rounding identical for any leading shape
    out = xi[..., 0:1] * L[:, 0]
    for j in range(1, L.shape[1]):
        out = out + xi[..., j:j + 1] * L[:, j]
    return out


# --- control sets --------------------------------------------------------------

def _grid_values(values) -> np.ndarray:
    arr = np.unique(np.asarray(values, dtype=float))
    if arr.size == 0:
        raise ControlError("control grid is empty")
    return arr


@dataclass(frozen=True)
class ScalarVolInterval:
    """Gamma = [sigma_lo^2, sigma_hi^2], discretized uniformly in sigma."""

    sigma_lo: float
    sigma_hi: float
    grid: int = 3
    kind = "vol"
    dim = 1

    def __post_init__(self):
        if not 0 <= self.sigma_lo <= self.sigma_hi:
            raise ControlError("need 0 <= sigma_lo <= sigma_hi")
        if self.grid < 1:
            raise ControlError("grid must have at least one point")

    def sigmas(self) -> np.ndarray:
        if self.grid == 1 or self.sigma_lo == self.sigma_hi:
            return np.array([self.sigma_hi])
        return _grid_values(np.linspace(self.sigma_lo, self.sigma_hi, self.grid))

    def values(self) -> list[np.ndarray]:
        return [np.array([[s * s]]) for s in self.sigmas()]

    def contains(self, value) -> bool:
        g = float(np.asarray(value).reshape(-1)[0])
        return self.sigma_lo ** 2 - PSD_TOL <= g <= self.sigma_hi ** 2 + PSD_TOL


@dataclass(frozen=True)
class SigmaGrid:
    """An explicit finite set of volatilities, Gamma = {sigma^2}."""

    sigmas_: tuple
    kind = "vol"
    dim = 1

    def __post_init__(self):
        s = _grid_values(self.sigmas_)
        if s.min() < 0:
            raise ControlError("volatilities must be nonnegative")
        object.__setattr__(self, "sigmas_", tuple(s))

    def sigmas(self) -> np.ndarray:
        return np.array(self.sigmas_)

    def values(self):
        return [np.array([[s * s]]) for s in self.sigmas_]

    def contains(self, value):
        g = float(np.asarray(value).reshape(-1)[0])
        return any(abs(g - s * s) <= PSD_TOL for s in self.sigmas_)


@dataclass(frozen=True, eq=False)
class MatrixList:
    mats: tuple
    kind = "vol"

    def __post_init__(self):
        mats = tuple(check_psd(m) for m in self.mats)
        if not mats:
            raise ControlError("matrix list is empty")
        if len({m.shape for m in mats}) != 1:
            raise ControlError("matrices must share a shape")
        object.__setattr__(self, "mats", mats)

    @property
    def dim(self):
        return self.mats[0].shape[0]

    def values(self):
        return list(self.mats)

    def contains(self, value):
        return any(np.allclose(value, m, atol=PSD_TOL, rtol=0) for m in self.mats)


@dataclass(frozen=True)
class AnisotropicDiag2:
    """Gamma = {diag(alpha, 1 - alpha)} over an alpha grid in [0, 1]."""

    alphas: tuple
    kind = "vol"
    dim = 2

    def __post_init__(self):
        a = _grid_values(self.alphas)
        if a.min() < 0 or a.max() > 1:
            raise ControlError("alpha must lie in [0, 1]")
        object.__setattr__(self, "alphas", tuple(a))

    def values(self):
        return [np.diag([a, 1.0 - a]) for a in self.alphas]

    def contains(self, value):
        value = np.asarray(value)
        return (value.shape == (2, 2) and value[0, 1] == 0 == value[1, 0]
                and 0 <= value[0, 0] <= 1 and abs(value[0, 0] + value[1, 1] - 1) <= PSD_TOL)


@dataclass(frozen=True)
class PointMass:
    """Dirac laws on constant paths, one per starting value."""

    xs: tuple
    kind = "point"
    dim = 1

    def __post_init__(self):
        xs = _grid_values(self.xs)
        if xs.min() < -1 or xs.max() > 1:
            raise ControlError("point masses live on [-1, 1]")
        object.__setattr__(self, "xs", tuple(xs))

    def values(self):
        return [np.array([x]) for x in self.xs]

    def contains(self, value):
        return float(np.asarray(value).reshape(-1)[0]) in self.xs


ControlSet = ScalarVolInterval | SigmaGrid | MatrixList | AnisotropicDiag2 | PointMass


@dataclass(frozen=True, eq=False)
class ControlLaw:
    """Piecewise-constant schedule: ``values[j]`` applies from step ``breaks[j]``."""

    law_id: int
    values: tuple
    breaks: tuple = (0,)
    label: str = ""
    control_set: Optional[object] = field(default=None, repr=False)

    def __post_init__(self):
        values = tuple(np.asarray(v, dtype=float) for v in self.values)
        if not values or len(values) != len(self.breaks):
            raise ControlError("need one break per scheduled value")
        if self.breaks[0] != 0 or list(self.breaks) != sorted(set(self.breaks)):
            raise ControlError("breaks must start at 0 and increase strictly")
        if self.control_set is not None:
            for v in values:
                if not self.control_set.contains(v):
                    raise ControlError(f"scheduled value {v.tolist()} is not in the control set")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "breaks", tuple(int(b) for b in self.breaks))

    @property
    def constant(self) -> bool:
        return len(self.values) == 1

    def pieces(self, steps: int):
        """Yield ``(start, stop, value)`` covering steps 0..steps-1."""
        ends = list(self.breaks[1:]) + [steps]
        for start, stop, v in zip(self.breaks, ends, self.values):
            start, stop = min(start, steps), min(stop, steps)
            if stop > start:
                yield start, stop, v

    def gammas(self, steps: int) -> np.ndarray:
        out = np.empty((steps,) + self.values[0].shape)
        for start, stop, v in self.pieces(steps):
            out[start:stop] = v
        return out


def family_controls(cs, schedule_mode: str = "constant_only", *, steps: int | None = None,
                    n_switch: int = 4, count: int = 0, seed: int = 0) -> list[ControlLaw]:
    """Enumerate control laws over a control set.

    ``one_switch`` adds every ordered pair of values switched at each of
    ``n_switch`` evenly spaced steps; ``random_switch`` appends ``count``
    random schedules drawn deterministically from ``seed``.
    """
    values = cs.values()
    if not values:
        raise ControlError("empty control set")
    laws = [ControlLaw(i, (v,), (0,), f"const[{i}]", cs) for i, v in enumerate(values)]
    if schedule_mode == "constant_only":
        return laws
    if steps is None:
        raise ValueError("switching schedules need the number of grid steps")
    if schedule_mode == "one_switch":
        switch_steps = [j * steps // (n_switch + 1) for j in range(1, n_switch + 1)]
        if len(set(switch_steps)) != n_switch or switch_steps[0] == 0:
            raise ValueError(f"grid with {steps} steps is too coarse for {n_switch} switch times")
        for (i, a), (j, b) in itertools.product(enumerate(values), repeat=2):
            for s in switch_steps:
                laws.append(ControlLaw(len(laws), (a, b), (0, s), f"switch[{i}->{j}@{s}]", cs))
        return laws
    if schedule_mode == "random_switch":
        rng = np.random.default_rng(seed)
        for _ in range(count):
            n_pieces = int(rng.integers(1, 5))
            cuts = np.sort(rng.choice(np.arange(1, steps), size=min(n_pieces - 1, steps - 1), replace=False))
            picks = rng.integers(0, len(values), size=cuts.size + 1)
            laws.append(ControlLaw(
                len(laws), tuple(values[p] for p in picks), (0, *map(int, cuts)),
                "random[" + ",".join(map(str, picks)) + "]", cs))
        return laws
    raise ValueError(f"unknown schedule mode {schedule_mode!r}")


# --- ensembles -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SemimartingaleRecord:
    path: GridPath
    mart_inc: np.ndarray
    fv_inc: np.ndarray
    qv_inc: np.ndarray
    law_id: int


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Structure-of-arrays ensemble; ``qv_inc`` has leading axis 1 when shared."""

    grid: TimeGrid
    states: np.ndarray
    mart_inc: np.ndarray
    fv_inc: np.ndarray
    qv_inc: np.ndarray
    law_ids: np.ndarray
    path_index: np.ndarray
    failures: tuple = ()

    def __post_init__(self):
        for name in ("states", "mart_inc", "fv_inc", "qv_inc", "law_ids", "path_index"):
            getattr(self, name).setflags(write=False)

    def __len__(self):
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[2]

    @property
    def law_id(self) -> int:
        ids = np.unique(self.law_ids)
        if ids.size != 1:
            raise ValueError("ensemble mixes several laws")
        return int(ids[0])

    def qv(self, i: int) -> np.ndarray:
        return self.qv_inc[0 if self.qv_inc.shape[0] == 1 else i]

    def path(self, i: int) -> GridPath:
        return GridPath(self.grid, self.states[i])

    def record(self, i: int) -> SemimartingaleRecord:
        return SemimartingaleRecord(self.path(i), self.mart_inc[i], self.fv_inc[i], self.qv(i),
                                    int(self.law_ids[i]))

    def records(self):
        return [self.record(i) for i in range(len(self))]

    def by_law(self) -> list["Ensemble"]:
        return [self.take(np.flatnonzero(self.law_ids == lid)) for lid in np.unique(self.law_ids)]

    def take(self, rows) -> "Ensemble":
        rows = np.asarray(rows)
        qv = self.qv_inc if self.qv_inc.shape[0] == 1 else self.qv_inc[rows]
        return Ensemble(self.grid, self.states[rows], self.mart_inc[rows], self.fv_inc[rows], qv,
                        self.law_ids[rows], self.path_index[rows], self.failures)

    @classmethod
    def concat(cls, parts: Sequence["Ensemble"]) -> "Ensemble":
        first = parts[0]
        shared = all(p.qv_inc.shape[0] == 1 for p in parts) and all(
            np.array_equal(p.qv_inc, first.qv_inc) for p in parts)
        if shared:
            qv = first.qv_inc
        else:
            qv = np.concatenate([np.broadcast_to(p.qv_inc, (len(p),) + p.qv_inc.shape[1:]) for p in parts])
        return cls(
            first.grid,
            np.concatenate([p.states for p in parts]),
            np.concatenate([p.mart_inc for p in parts]),
            np.concatenate([p.fv_inc for p in parts]),
            qv,
            np.concatenate([p.law_ids for p in parts]),
            np.concatenate([p.path_index for p in parts]),
            tuple(itertools.chain.from_iterable(p.failures for p in parts)),
        )


def ledger_states(x0: np.ndarray, inc: np.ndarray) -> np.ndarray:
    """Sequential sums ``X[i+1] = X[i] + inc[i]`` along axis 1."""
    n = inc.shape[0]
    start = np.broadcast_to(x0, (n, 1, inc.shape[2]))
    return np.add.accumulate(np.concatenate([start, inc], axis=1), axis=1)


def _chunked(indices: np.ndarray, size: int):
    return [indices[i:i + size] for i in range(0, indices.size, size)]


def _map_chunks(fn, chunks, threads: int):
    if threads <= 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, chunks))


def _resolve_indices(n_paths, path_indices):
    if path_indices is None:
        return np.arange(n_paths, dtype=np.int64)
    return np.asarray(path_indices, dtype=np.int64)


def _gbm_increments(ctrl: ControlLaw, grid: TimeGrid, seed: int, idx: np.ndarray,
                    start: int, n_steps: int, k: int) -> np.ndarray:
    xi = gaussian_steps(seed, idx, start, n_steps, k)
    sqrt_dt = math.sqrt(grid.dt)
    inc = np.empty_like(xi)
    for a, b, gamma in ctrl.pieces(grid.steps):
        lo, hi = max(a, start), min(b, start + n_steps)
        if hi > lo:
            inc[:, lo - start:hi - start] = _apply_factor(xi[:, lo - start:hi - start], psd_factor(gamma)) * sqrt_dt
    return inc


def simulate_gbm(ctrl: ControlLaw, grid: TimeGrid, dim: int | None = None, n_paths: int = 1,
                 seed: int = 0, *, x0=None, path_indices=None, threads: int = 1) -> Ensemble:
    """Martingale paths with quadratic-variation density given by the schedule."""
    k = ctrl.values[0].shape[0]
    if dim is not None and dim != k:
        raise ControlError(f"control is {k}x{k} but dim={dim}")
    for v in ctrl.values:
        check_psd(v)
    x0 = np.zeros(k) if x0 is None else np.asarray(x0, dtype=float).reshape(k)
    idx = _resolve_indices(n_paths, path_indices)
    qv = (ctrl.gammas(grid.steps) * grid.dt)[None]

    def run(chunk):
        dm = _gbm_increments(ctrl, grid, seed, chunk, 0, grid.steps, k)
        da = np.zeros_like(dm)
        return ledger_states(x0, dm + da), dm, da

    parts = _map_chunks(run, _chunked(idx, PATH_CHUNK), threads)
    states = np.concatenate([p[0] for p in parts]) if parts else np.empty((0, grid.steps + 1, k))
    dm = np.concatenate([p[1] for p in parts]) if parts else np.empty((0, grid.steps, k))
    da = np.concatenate([p[2] for p in parts]) if parts else np.empty((0, grid.steps, k))
    return Ensemble(grid, states, dm, da, qv, np.full(idx.size, ctrl.law_id), idx)


def simulate_pointmass(xs, grid: TimeGrid) -> Ensemble:
    """One constant path per x; increments and quadratic variation vanish."""
    xs = np.asarray(xs, dtype=float).reshape(-1)
    n, steps = xs.size, grid.steps
    states = np.repeat(xs[:, None, None], steps + 1, axis=1)
    zeros = np.zeros((n, steps, 1))
    return Ensemble(grid, states, zeros, zeros.copy(), np.zeros((1, steps, 1, 1)),
                    np.arange(n), np.zeros(n, dtype=np.int64))


@dataclass(frozen=True)
class SdeCoefficients:
    """Coefficients of dX = b dt + sum h_ij d<B^i,B^j> + sum sigma_j dB^j.

    Callables are vectorized over paths: ``b(t, X)`` -> (n, d),
    ``sigma(t, X)`` -> (n, d, k), ``h(t, X)`` -> (n, d, k, k) or None.
    """

    b: Callable
    sigma: Callable
    h: Optional[Callable] = None
    lipschitz: float | None = None
    nondegeneracy: float = 0.0


class SimulationError(RuntimeError):
    pass


def _gsde_step(coeffs, t, X, gamma, L, xi, dt, sqrt_dt):
    s = coeffs.sigma(t, X)
    noise = _apply_factor(xi, L) * sqrt_dt
    dm = s[:, :, 0] * noise[:, 0:1]
    for j in range(1, s.shape[2]):
        dm = dm + s[:, :, j] * noise[:, j:j + 1]
    da = coeffs.b(t, X) * dt
    if coeffs.h is not None:
        da = da + np.einsum("ndij,ij->nd", coeffs.h(t, X), gamma) * dt
    qv = np.einsum("ndi,ij,nej->nde", s, gamma, s) * dt
    return dm, da, qv


def simulate_gsde(coeffs: SdeCoefficients, ctrl: ControlLaw, grid: TimeGrid, x0, n_paths: int = 1,
                  seed: int = 0, *, path_indices=None, threads: int = 1) -> Ensemble:
    """Euler-Maruyama under a scheduled control; non-finite paths are dropped and recorded."""
    k = ctrl.values[0].shape[0]
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d = x0.size
    idx = _resolve_indices(n_paths, path_indices)
    gammas = ctrl.gammas(grid.steps)
    factors = {id(v): psd_factor(v) for v in ctrl.values}
    piece_of = np.zeros(grid.steps, dtype=int)
    for j, (a, b, _) in enumerate(ctrl.pieces(grid.steps)):
        piece_of[a:b] = j
    dt, sqrt_dt = grid.dt, math.sqrt(grid.dt)

    def run(chunk):
        n = chunk.size
        xi = gaussian_steps(seed, chunk, 0, grid.steps, k)
        states = np.empty((n, grid.steps + 1, d))
        dm_all = np.empty((n, grid.steps, d))
        da_all = np.empty((n, grid.steps, d))
        qv_all = np.empty((n, grid.steps, d, d))
        states[:, 0] = x0
        failed_at = np.full(n, -1)
        with np.errstate(all="ignore"):
            for i in range(grid.steps):
                X = states[:, i]
                v = ctrl.values[piece_of[i]]
                dm, da, qv = _gsde_step(coeffs, grid.time(i), X, gammas[i], factors[id(v)], xi[:, i], dt, sqrt_dt)
                new = X + (dm + da)
                bad = ~np.isfinite(new).all(axis=1) & (failed_at < 0)
                failed_at[bad] = i
                dead = failed_at >= 0
                if dead.any():
                    # freeze failed paths so they stay finite; they are dropped below
                    dm[dead], da[dead], qv[dead] = 0.0, 0.0, 0.0
                    new[dead] = X[dead]
                states[:, i + 1], dm_all[:, i], da_all[:, i], qv_all[:, i] = new, dm, da, qv
        ok = failed_at < 0
        fails = tuple((ctrl.law_id, int(chunk[j]), int(failed_at[j])) for j in np.flatnonzero(~ok))
        return states[ok], dm_all[ok], da_all[ok], qv_all[ok], chunk[ok], fails

    parts = _map_chunks(run, _chunked(idx, PATH_CHUNK), threads)
    kept = np.concatenate([p[4] for p in parts])
    return Ensemble(
        grid,
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[2] for p in parts]),
        np.concatenate([p[3] for p in parts]),
        np.full(kept.size, ctrl.law_id),
        kept,
        tuple(itertools.chain.from_iterable(p[5] for p in parts)),
    )


# --- streamed exit sampling -------------------------------------------------------

def _stream_gbm_exits(ctrl, grid, q, x0, seed, idx):
    k = x0.size
    n = idx.size
    x = np.broadcast_to(x0, (n, k)).copy()
    i_open, i_closed = first_hits(q.regions(x)[:, None])
    start = 1
    while start <= grid.steps:
        active = np.flatnonzero(i_closed == NO_EXIT)
        if active.size == 0:
            break
        stop = min(grid.steps, (start - 1) // BLOCK * BLOCK + BLOCK)
        inc = _gbm_increments(ctrl, grid, seed, idx[active], start - 1, stop - start + 1, k)
        traj = ledger_states(x[active][:, None, :], inc)[:, 1:]
        o, c = first_hits(q.regions(traj))
        need_open = (i_open[active] == NO_EXIT) & (o != NO_EXIT)
        i_open[active[need_open]] = o[need_open] + start
        hit = c != NO_EXIT
        i_closed[active[hit]] = c[hit] + start
        x[active] = traj[:, -1]
        start = stop + 1
    return i_open, i_closed


def _stream_gsde_exits(coeffs, ctrl, grid, q, x0, seed, idx):
    k = ctrl.values[0].shape[0]
    n = idx.size
    X = np.broadcast_to(x0, (n, x0.size)).copy()
    i_open, i_closed = first_hits(q.regions(X)[:, None])
    gammas = ctrl.gammas(grid.steps)
    dt, sqrt_dt = grid.dt, math.sqrt(grid.dt)
    piece_of = np.zeros(grid.steps, dtype=int)
    for j, (a, b, _) in enumerate(ctrl.pieces(grid.steps)):
        piece_of[a:b] = j
    factors = [psd_factor(v) for v in ctrl.values]
    xi_block, block_id, block_rows = None, -1, None
    for i in range(grid.steps):
        active = np.flatnonzero(i_closed == NO_EXIT)
        if active.size == 0:
            break
        if i // BLOCK != block_id:
            block_id = i // BLOCK
            block_rows = active
            xi_block = gaussian_steps(seed, idx[active], block_id * BLOCK, min(BLOCK, grid.steps - block_id * BLOCK), k)
        rows = np.searchsorted(block_rows, active)
        Xa = X[active]
        dm, da, _ = _gsde_step(coeffs, grid.time(i), Xa, gammas[i], factors[piece_of[i]],
                               xi_block[rows, i - block_id * BLOCK], dt, sqrt_dt)
        new = Xa + (dm + da)
        if not np.isfinite(new).all():
            raise SimulationError(f"non-finite state at step {i} for law {ctrl.law_id}")
        X[active] = new
        o, c = first_hits(q.regions(new)[:, None])
        need_open = (i_open[active] == NO_EXIT) & (o != NO_EXIT)
        i_open[active[need_open]] = i + 1
        i_closed[active[c != NO_EXIT]] = i + 1
    return i_open, i_closed


@dataclass(frozen=True, eq=False)
class ScenarioFamily:
    """A finite family of laws plus the dynamics that turn a law into paths."""

    kind: str
    control_set: object
    laws: tuple
    x0: np.ndarray
    coeffs: Optional[SdeCoefficients] = None

    def __post_init__(self):
        if self.kind not in ("gbm", "gsde", "pointmass"):
            raise ValueError(f"unknown family kind {self.kind!r}")
        object.__setattr__(self, "laws", tuple(self.laws))
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, dtype=float)))
        if self.kind == "gsde" and self.coeffs is None:
            raise ValueError("gsde family needs coefficients")

    @property
    def dim(self) -> int:
        return self.x0.size

    def law(self, law_id: int) -> ControlLaw:
        return next(l for l in self.laws if l.law_id == law_id)

    def simulate(self, law: ControlLaw, grid: TimeGrid, n_paths: int, seed: int, *,
                 path_indices=None, threads: int = 1) -> Ensemble:
        if self.kind == "pointmass":
            ens = simulate_pointmass([float(law.values[0][0])], grid)
            return Ensemble(grid, ens.states, ens.mart_inc, ens.fv_inc, ens.qv_inc,
                            np.array([law.law_id]), ens.path_index)
        if self.kind == "gbm":
            return simulate_gbm(law, grid, self.dim, n_paths, seed, x0=self.x0,
                                path_indices=path_indices, threads=threads)
        return simulate_gsde(self.coeffs, law, grid, self.x0, n_paths, seed,
                             path_indices=path_indices, threads=threads)

    def ensembles(self, grid: TimeGrid, n_paths: int, seed: int, threads: int = 1) -> list[Ensemble]:
        return [self.simulate(law, grid, n_paths, seed, threads=threads) for law in self.laws]

    def exit_sample(self, law: ControlLaw, grid: TimeGrid, q: Domain, n_paths: int, seed: int,
                    threads: int = 1) -> ExitSample:
        """Exit indices without storing paths; each path stops once it leaves the closure.

        Gives the same indices as ``exit_times`` on the fully simulated paths.
        """
        if q.dim != self.dim:
            raise ValueError(f"domain dim {q.dim} != family dim {self.dim}")
        if self.kind == "pointmass":
            ens = self.simulate(law, grid, 1, seed)
            o, c = first_hits(q.regions(ens.states))
            return ExitSample(law.law_id, grid, ens.path_index, o, c)
        idx = _resolve_indices(n_paths, None)

        def run(chunk):
            if self.kind == "gbm":
                return _stream_gbm_exits(law, grid, q, self.x0, seed, chunk)
            return _stream_gsde_exits(self.coeffs, law, grid, q, self.x0, seed, chunk)

        parts = _map_chunks(run, _chunked(idx, STREAM_CHUNK), threads)
        return ExitSample(law.law_id, grid, idx,
                          np.concatenate([p[0] for p in parts]),
                          np.concatenate([p[1] for p in parts]))
