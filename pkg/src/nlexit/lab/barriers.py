"""Barrier functions behind immediate exit and the second-moment bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..domains import Domain


@dataclass(frozen=True)
class BarrierParams:
    """Gaussian bump e^{-k|y-z|^2} centred at an exterior ball of radius r."""

    z: tuple
    r: float
    R: float
    k: float
    lam: float
    epsilon: float

    def __post_init__(self):
        if not (self.r > 0 and self.k > 0 and self.lam > 0 and self.epsilon > 0):
            raise ValueError("r, k, lambda and epsilon must be positive")
        if self.R < 2 * self.r:
            raise ValueError(f"localization radius R={self.R} must be at least 2r={2 * self.r}")
        object.__setattr__(self, "z", tuple(np.atleast_1d(np.asarray(self.z, dtype=float)).tolist()))


def barrier_coefficient(bp: BarrierParams) -> float:
    """(2 lam k r^2 - 1) eps - 2 (R + r): positive once k is large enough to force exit."""
    return (2 * bp.lam * bp.k * bp.r ** 2 - 1) * bp.epsilon - 2 * (bp.R + bp.r)


def barrier_threshold(bp: BarrierParams) -> float:
    """The sharpness k* at which the coefficient vanishes."""
    return (2 * (bp.R + bp.r) / bp.epsilon + 1) / (2 * bp.lam * bp.r ** 2)


def barrier_value(bp: BarrierParams, y) -> float:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return math.exp(-bp.k * float(np.sum((y - np.asarray(bp.z)) ** 2)))


def barrier_gradient(bp: BarrierParams, y) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    u = y - np.asarray(bp.z)
    return -2 * bp.k * u * barrier_value(bp, y)


def barrier_hessian(bp: BarrierParams, y) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    u = y - np.asarray(bp.z)
    return (4 * bp.k ** 2 * np.outer(u, u) - 2 * bp.k * np.eye(u.size)) * barrier_value(bp, y)


@dataclass(frozen=True)
class DerivativeCheck:
    passed: bool
    grad_rel_error: float
    hess_rel_error: float
    trace_rel_error: float
    y: tuple
    tolerance: float


def barrier_derivative_check(bp: BarrierParams, y, step: float | None = None,
                             tolerance: float = 1e-6) -> DerivativeCheck:
    """Closed-form gradient and Hessian against central differences.

    The gradient is differenced from h and the Hessian from the closed-form
    gradient.  The default step is 1e-4 / sqrt(k).  Errors are relative to the larger of the exact norm and the
    natural derivative scale of the bump (sqrt(k) h for the gradient, k h
    for the Hessian), so points where a derivative vanishes stay well posed.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    d = y.size
    h0 = barrier_value(bp, y)
    g = barrier_gradient(bp, y)
    H = barrier_hessian(bp, y)
    g_fd = np.empty(d)
    H_fd = np.empty((d, d))
    # the bump varies on the scale 1/sqrt(k); a fixed step would lose accuracy for sharp bumps
    step = 1e-4 / math.sqrt(bp.k) if step is None else step
    for i in range(d):
        e = np.zeros(d)
        e[i] = step
        g_fd[i] = (barrier_value(bp, y + e) - barrier_value(bp, y - e)) / (2 * step)
        H_fd[:, i] = (barrier_gradient(bp, y + e) - barrier_gradient(bp, y - e)) / (2 * step)
    H_fd = (H_fd + H_fd.T) / 2
    g_scale = max(np.abs(g).max(), math.sqrt(bp.k) * h0, np.finfo(float).tiny)
    H_scale = max(np.abs(H).max(), bp.k * h0, np.finfo(float).tiny)
    g_err = float(np.abs(g_fd - g).max() / g_scale)
    H_err = float(np.abs(H_fd - H).max() / H_scale)
    u2 = float(np.sum((y - np.asarray(bp.z)) ** 2))
    trace_exact = (4 * bp.k ** 2 * u2 - 2 * bp.k * d) * h0
    t_err = abs(float(np.trace(H)) - trace_exact) / max(abs(trace_exact), bp.k * h0, np.finfo(float).tiny)
    ok = g_err <= tolerance and H_err <= tolerance and t_err <= tolerance
    return DerivativeCheck(ok, g_err, H_err, t_err, tuple(y.tolist()), tolerance)


@dataclass(frozen=True)
class MomentBoundParams:
    """Exponential barrier beta * e^{2 y_l / lam} with the smallest admissible beta."""

    lam: float
    epsilon: float
    component: int
    beta: float
    C_h: float

    @property
    def bound(self) -> float:
        return 4 * self.C_h ** 2


def moment_bound_params(q: Domain, lam: float, epsilon: float, component: int = 0) -> MomentBoundParams:
    """beta = lam^2 sup e^{-2 y_l/lam} / (2 eps), C_h = beta sup e^{2 y_l/lam} over the closure."""
    if lam == 0 or not epsilon > 0:
        raise ValueError("need lam != 0 and epsilon > 0")
    lo, hi = q.coordinate_range(component)
    # exponents are monotone in y_l, so the sups sit at the ends of the coordinate range
    sup_neg = max(math.exp(-2 * lo / lam), math.exp(-2 * hi / lam))
    sup_pos = max(math.exp(2 * lo / lam), math.exp(2 * hi / lam))
    beta = lam ** 2 * sup_neg / (2 * epsilon)
    return MomentBoundParams(lam, epsilon, component, beta, beta * sup_pos)
