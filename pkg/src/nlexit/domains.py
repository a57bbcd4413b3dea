"""Catalog of open sets Q with exact membership and exterior-ball verdicts.

Every domain classifies points into three disjoint regions: the open set Q,
its boundary, and the complement of its closure.  Region codes are small
integers so whole path ensembles can be classified in one vectorized call.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class Region(enum.IntEnum):
    IN_Q = 0
    ON_BOUNDARY = 1
    IN_CLOSURE_COMPLEMENT = 2


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class Witness:
    point: tuple
    center: tuple
    radius: float


@dataclass(frozen=True)
class ExteriorBallVerdict:
    # None means the rule table cannot decide (only for Intersection)
    satisfied_everywhere: Optional[bool]
    witness: Optional[Witness] = None
    failure_point: Optional[tuple] = None
    satisfied_at_point: Optional[bool] = None


def _regions_from_margin(s: np.ndarray, tol: float) -> np.ndarray:
    """Map a margin (negative inside, zero on the boundary) to region codes."""
    out = np.full(s.shape, Region.ON_BOUNDARY, dtype=np.int8)
    out[s < -tol] = Region.IN_Q
    out[s > tol] = Region.IN_CLOSURE_COMPLEMENT
    return out


class Domain:
    """Base class; subclasses define ``dim``, ``_margin`` and ``_sdf``."""

    dim: int
    convex: bool = True
    tag: str = ""

    def _as_points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x[None]
        if x.shape[-1] != self.dim:
            raise DimensionError(f"{type(self).__name__} has dim {self.dim}, got point(s) of dim {x.shape[-1]}")
        return x

    def regions(self, x, tol: float = 0.0) -> np.ndarray:
        """Region codes for points with the coordinate axis last."""
        return _regions_from_margin(self._margin(self._as_points(x)), tol)

    def classify(self, x, tol: float = 0.0) -> Region:
        x = self._as_points(x)
        if x.ndim != 1:
            raise DimensionError("classify takes a single point; use regions() for arrays")
        return Region(int(self.regions(x, tol)))

    def signed_distance(self, x) -> np.ndarray | float:
        x = self._as_points(x)
        out = self._sdf(x)
        return float(out) if x.ndim == 1 else out

    def exterior_ball(self, x=None, tol: float = 0.0) -> ExteriorBallVerdict:
        if x is None:
            return ExteriorBallVerdict(satisfied_everywhere=True)
        x = self._as_points(x)
        if self.classify(x, tol) != Region.ON_BOUNDARY:
            raise ValueError(f"{tuple(x)} is not on the boundary of {self!r}")
        center, radius = self._witness(x)
        return ExteriorBallVerdict(
            satisfied_everywhere=True,
            witness=Witness(tuple(map(float, x)), tuple(map(float, center)), float(radius)),
            satisfied_at_point=True,
        )

    def coordinate_range(self, l: int) -> tuple[float, float]:
        raise ValueError(f"{type(self).__name__} is unbounded")

    @property
    def bounded(self) -> bool:
        try:
            self.coordinate_range(0)
        except ValueError:
            return False
        return True

    def sample_boundary(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


@dataclass(frozen=True, eq=False)
class HalfSpace(Domain):
    """Q = {x : <x, normal> < offset}."""

    normal: np.ndarray
    offset: float = 0.0
    tag = "half_space"

    def __post_init__(self):
        n = np.atleast_1d(np.asarray(self.normal, dtype=float))
        norm = np.linalg.norm(n)
        if not norm > 0:
            raise ValueError("normal must be nonzero")
        object.__setattr__(self, "normal", n / norm)

    @property
    def dim(self):
        return self.normal.size

    def _margin(self, x):
        return x @ self.normal - self.offset

    _sdf = _margin

    def _witness(self, x):
        return x + self.normal, 1.0

    def sample_boundary(self, rng, n):
        pts = rng.uniform(-5, 5, size=(n, self.dim))
        return pts - np.outer(pts @ self.normal - self.offset, self.normal)

    def to_config(self):
        return {"type": "half_space", "normal": self.normal.tolist(), "offset": self.offset}


@dataclass(frozen=True, eq=False)
class Ball(Domain):
    center: np.ndarray
    radius: float

    tag = "ball"

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def dim(self):
        return self.center.size

    def _margin(self, x):
        return np.linalg.norm(x - self.center, axis=-1) - self.radius

    _sdf = _margin

    def _witness(self, x):
        u = (x - self.center) / self.radius
        return x + self.radius * u, self.radius

    def coordinate_range(self, l):
        return self.center[l] - self.radius, self.center[l] + self.radius

    def sample_boundary(self, rng, n):
        u = rng.standard_normal((n, self.dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        return self.center + self.radius * u

    def to_config(self):
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class BallComplement(Domain):
    """Q = {x : |x - center| > radius}."""

    center: np.ndarray
    radius: float
    convex = False
    tag = "ball_complement"

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def dim(self):
        return self.center.size

    def _margin(self, x):
        return self.radius - np.linalg.norm(x - self.center, axis=-1)

    _sdf = _margin

    def _witness(self, x):
        # the removed ball itself touches every boundary point
        return self.center, self.radius

    def sample_boundary(self, rng, n):
        return Ball(self.center, self.radius).sample_boundary(rng, n)

    def to_config(self):
        return {"type": "ball_complement", "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class Box(Domain):
    lo: np.ndarray
    hi: np.ndarray
    tag = "box"

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or not np.all(lo < hi):
            raise ValueError("box needs lo < hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.size

    def _margin(self, x):
        return np.max(np.maximum(self.lo - x, x - self.hi), axis=-1)

    def _sdf(self, x):
        mid, half = (self.lo + self.hi) / 2, (self.hi - self.lo) / 2
        q = np.abs(x - mid) - half
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        return outside + np.minimum(q.max(axis=-1), 0.0)

    def _witness(self, x):
        # push out through the face the point is closest to
        above, below = x - self.hi, self.lo - x
        step = np.zeros(self.dim)
        if above.max() >= below.max():
            step[int(np.argmax(above))] = 1.0
        else:
            step[int(np.argmax(below))] = -1.0
        return x + step, 1.0

    def coordinate_range(self, l):
        return float(self.lo[l]), float(self.hi[l])

    def sample_boundary(self, rng, n):
        pts = rng.uniform(self.lo, self.hi, size=(n, self.dim))
        axis = rng.integers(0, self.dim, size=n)
        side = rng.integers(0, 2, size=n).astype(bool)
        rows = np.arange(n)
        pts[rows, axis] = np.where(side, self.hi[axis], self.lo[axis])
        return pts

    def to_config(self):
        return {"type": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True, eq=False)
class Interval(Box):
    """Q = (a, b) in one dimension."""

    a: float = field(default=0.0)
    b: float = field(default=1.0)
    lo: np.ndarray = field(init=False, repr=False)
    hi: np.ndarray = field(init=False, repr=False)
    tag = "interval"

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("interval needs a < b")
        object.__setattr__(self, "lo", np.array([float(self.a)]))
        object.__setattr__(self, "hi", np.array([float(self.b)]))

    def to_config(self):
        return {"type": "interval", "a": self.a, "b": self.b}


@dataclass(frozen=True, eq=False)
class LowerRay(Domain):
    """Q = (-inf, a) in one dimension."""

    a: float = 0.0
    dim = 1
    tag = "lower_ray"

    def _margin(self, x):
        return x[..., 0] - self.a

    _sdf = _margin

    def _witness(self, x):
        return x + 1.0, 1.0

    def sample_boundary(self, rng, n):
        return np.full((n, 1), float(self.a))

    def to_config(self):
        return {"type": "lower_ray", "a": self.a}


@dataclass(frozen=True, eq=False)
class Strip2D(Domain):
    """Q = (-inf, inf) x (0, 1)."""

    dim = 2
    tag = "strip2d"

    def _margin(self, x):
        y = x[..., 1]
        return np.maximum(-y, y - 1.0)

    _sdf = _margin

    def _witness(self, x):
        return x + (np.array([0.0, -1.0]) if x[1] < 0.5 else np.array([0.0, 1.0])), 1.0

    def sample_boundary(self, rng, n):
        return np.column_stack([rng.uniform(-5, 5, n), rng.integers(0, 2, n).astype(float)])

    def to_config(self):
        return {"type": "strip2d"}


_DIAG_UP = np.array([1.0, 1.0]) / np.sqrt(2)
_DIAG_UP_LEFT = np.array([-1.0, 1.0]) / np.sqrt(2)


@dataclass(frozen=True, eq=False)
class ConeTest(Domain):
    """Q = {(x, y) : y < |x|}; the exterior ball condition fails at the vertex."""

    dim = 2
    convex = False
    tag = "cone_test"

    def _margin(self, p):
        return p[..., 1] - np.abs(p[..., 0])

    def _sdf(self, p):
        dist = np.full(p.shape[:-1], np.inf)
        for ray in (_DIAG_UP, _DIAG_UP_LEFT):
            t = np.maximum(p @ ray, 0.0)
            dist = np.minimum(dist, np.linalg.norm(p - t[..., None] * ray, axis=-1))
        return np.where(self._margin(p) < 0, -dist, np.where(self._margin(p) > 0, dist, 0.0))

    def exterior_ball(self, x=None, tol: float = 0.0):
        if x is None:
            return ExteriorBallVerdict(satisfied_everywhere=False, failure_point=(0.0, 0.0))
        x = self._as_points(x)
        if self.classify(x, tol) != Region.ON_BOUNDARY:
            raise ValueError(f"{tuple(x)} is not on the boundary of {self!r}")
        if x[0] == 0.0:
            return ExteriorBallVerdict(
                satisfied_everywhere=False, failure_point=(0.0, 0.0), satisfied_at_point=False)
        # tangent ball inside the convex set {y >= |x|}; radius |x0| keeps it off the other ray
        inward = _DIAG_UP_LEFT if x[0] > 0 else _DIAG_UP
        r = abs(float(x[0]))
        return ExteriorBallVerdict(
            satisfied_everywhere=False,
            witness=Witness(tuple(map(float, x)), tuple(map(float, x + r * inward)), r),
            failure_point=(0.0, 0.0),
            satisfied_at_point=True,
        )

    def sample_boundary(self, rng, n):
        x = rng.uniform(-5, 5, n)
        return np.column_stack([x, np.abs(x)])

    def to_config(self):
        return {"type": "cone_test"}


@dataclass(frozen=True, eq=False)
class Intersection(Domain):
    """Intersection of catalog members.

    Membership of Q is exact.  The boundary/closure split uses the
    intersection of the members' closures, which equals the closure of the
    intersection when every member is convex and the intersection is
    nonempty; for other combinations points can be reported on the boundary
    when they are outside the closure.
    """

    members: tuple
    tag = "intersection"

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("intersection needs at least one member")
        dims = {m.dim for m in members}
        if len(dims) != 1:
            raise DimensionError(f"members disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "members", members)

    @property
    def dim(self):
        return self.members[0].dim

    @property
    def convex(self):
        return all(m.convex for m in self.members)

    def _margin(self, x):
        return np.max([m._margin(x) for m in self.members], axis=0)

    def _sdf(self, x):
        return np.max([m._sdf(x) for m in self.members], axis=0)

    def exterior_ball(self, x=None, tol: float = 0.0):
        # convex sets have a supporting half-space, hence a tangent exterior ball, at every
        # boundary point; otherwise inward corners can break the condition
        everywhere = True if self.convex else None
        if x is None:
            return ExteriorBallVerdict(satisfied_everywhere=everywhere)
        x = self._as_points(x)
        if self.classify(x, tol) != Region.ON_BOUNDARY:
            raise ValueError(f"{tuple(x)} is not on the boundary of the intersection")
        # a ball avoiding one member avoids the intersection
        for m in self.members:
            if m.classify(x, tol) == Region.ON_BOUNDARY:
                v = m.exterior_ball(x, tol)
                if v.satisfied_at_point:
                    return ExteriorBallVerdict(everywhere, witness=v.witness, satisfied_at_point=True)
        return ExteriorBallVerdict(everywhere, satisfied_at_point=None)

    def coordinate_range(self, l):
        spans = []
        for m in self.members:
            try:
                spans.append(m.coordinate_range(l))
            except ValueError:
                pass
        if not spans:
            raise ValueError("intersection has no bounded member")
        return max(s[0] for s in spans), min(s[1] for s in spans)

    def sample_boundary(self, rng, n):
        out = []
        while len(out) < n:
            m = self.members[rng.integers(len(self.members))]
            pts = m.sample_boundary(rng, n)
            keep = self.regions(pts) == Region.ON_BOUNDARY
            out.extend(pts[keep])
        return np.asarray(out[:n])

    def to_config(self):
        return {"type": "intersection", "members": [m.to_config() for m in self.members]}


def classify(q: Domain, x, tol: float = 0.0) -> Region:
    return q.classify(x, tol)


def exterior_ball(q: Domain, x=None, tol: float = 0.0) -> ExteriorBallVerdict:
    return q.exterior_ball(x, tol)


def signed_distance(q: Domain, x):
    return q.signed_distance(x)


def domain_from_config(cfg: dict) -> Domain:
    """Build a domain from its tagged config object, e.g. ``{"type": "lower_ray", "a": 0}``."""
    kind = cfg["type"]
    if kind == "half_space":
        return HalfSpace(cfg["normal"], cfg.get("offset", 0.0))
    if kind == "ball":
        return Ball(cfg["center"], cfg["radius"])
    if kind == "ball_complement":
        return BallComplement(cfg["center"], cfg["radius"])
    if kind == "box":
        return Box(cfg["lo"], cfg["hi"])
    if kind == "interval":
        return Interval(a=cfg["a"], b=cfg["b"])
    if kind == "lower_ray":
        return LowerRay(cfg.get("a", 0.0))
    if kind == "strip2d":
        return Strip2D()
    if kind == "cone_test":
        return ConeTest()
    if kind == "intersection":
        return Intersection(tuple(domain_from_config(m) for m in cfg["members"]))
    raise ValueError(f"unknown domain type {kind!r}")
