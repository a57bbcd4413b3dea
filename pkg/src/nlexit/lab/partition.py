"""Hat-function partitions of unity on [0, 1] and the indicator approximation.

Level k uses n_k = 2^k + 1 hats of half-width h = 2^-k.  Hat i (1-based) peaks
at (i - 1) h, so it is positive somewhere on [(i-1)h, ih) and vanishes for
t >= i h.  The approximation of the indicator of [0, tau] is

    A_k(s) = sum_i 1[s <= i h] * phi_i(tau)

and it is compared with the cell-wise rewriting

    A_k(s) = sum_j 1[(j-1)h < s <= j h] * sum_{i >= j} phi_i(tau) + 1[s == 0].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..paths import TimeGrid


@dataclass(frozen=True)
class PartitionScheme:
    level: int

    def __post_init__(self):
        if self.level < 1:
            raise ValueError("level must be a positive integer")

    @property
    def n(self) -> int:
        return 2 ** self.level + 1

    @property
    def width(self) -> float:
        return 2.0 ** -self.level

    def phi(self, t) -> np.ndarray:
        """Hat values, shape ``t.shape + (n,)``; column i-1 holds phi_i."""
        t = np.asarray(t, dtype=float)
        peaks = np.arange(self.n) * self.width
        return np.clip(1.0 - np.abs(t[..., None] - peaks) / self.width, 0.0, 1.0)

    def edges(self) -> np.ndarray:
        """Cell edges j / 2^k for j = 0..n."""
        return np.arange(self.n + 1) * self.width

    def check(self, n_points: int = 10_001, tol: float = 1e-12, chunk: int = 256) -> None:
        t_all = np.linspace(0.0, 1.0, n_points)
        i = np.arange(1, self.n + 1)
        for start in range(0, n_points, chunk):
            t = t_all[start:start + chunk]
            vals = self.phi(t)
            if vals.min() < 0 or vals.max() > 1:
                raise ValueError("hat values must lie in [0, 1]")
            if np.abs(vals.sum(axis=-1) - 1).max() > tol:
                raise ValueError("hats do not sum to one")
            if np.any(vals[t[:, None] >= (i * self.width)[None, :]] != 0):
                raise ValueError("hat i does not vanish beyond i/2^k")


@dataclass(frozen=True)
class PartitionReport:
    level: int
    tau: float
    identity_max_error: float
    l1_gap: float
    gap_bound: float

    @property
    def passed(self) -> bool:
        return self.identity_max_error <= 1e-12 and self.l1_gap <= self.gap_bound


def indicator_approx(scheme: PartitionScheme, tau: float, s) -> np.ndarray:
    """Direct sum over hats; only the (at most two) hats positive at tau contribute."""
    s = np.asarray(s, dtype=float)
    weights = scheme.phi(tau)
    nz = np.flatnonzero(weights)
    return (s[..., None] <= (nz + 1) * scheme.width).astype(float) @ weights[nz]


def indicator_approx_rewritten(scheme: PartitionScheme, tau: float, s) -> np.ndarray:
    """Cell-wise form: on ((j-1)h, jh] the value is the tail sum of hats from j on."""
    s = np.asarray(s, dtype=float)
    tails = np.concatenate([[0.0], np.cumsum(scheme.phi(tau)[::-1])[::-1], [0.0]])
    # cell j holds s with edges[j-1] < s <= edges[j]; s = 0 and s > 1 land in zero slots
    j = np.searchsorted(scheme.edges(), s, side="left")
    return tails[j] + (s == 0).astype(float)


def l1_gap(scheme: PartitionScheme, tau: float) -> float:
    """Exact integral of |A_k - 1[0, tau]| over [0, 1].

    Both functions are constant between consecutive points of
    {0, tau, 1} and the cell edges, so a midpoint rule per piece is exact.
    """
    edges = np.union1d(scheme.edges(), [tau, 0.0, 1.0])
    edges = edges[(edges >= 0) & (edges <= 1)]
    mids = (edges[:-1] + edges[1:]) / 2
    diff = np.abs(indicator_approx(scheme, tau, mids) - (mids <= tau))
    return float(np.sum(diff * np.diff(edges)))


def partition_indicator_approx(scheme: PartitionScheme, tau: float,
                               grid: TimeGrid | None = None, check: bool = True) -> PartitionReport:
    """Identity error and L1 gap at one tau; ``check=False`` skips the scheme self-check."""
    if not 0 <= tau <= 1:
        raise ValueError("tau must lie in [0, 1]")
    if check:
        scheme.check()
    grid = grid or TimeGrid(1.0, 4 * 2 ** scheme.level)
    s = np.union1d(grid.times(), np.arange(scheme.n) * scheme.width)
    s = s[s <= 1.0]
    err = float(np.abs(indicator_approx(scheme, tau, s) - indicator_approx_rewritten(scheme, tau, s)).max())
    return PartitionReport(scheme.level, float(tau), err, l1_gap(scheme, tau), 3 * scheme.width)
