"""Parallel quadratic lane fitting, path polynomial and curvature.

Lane lines are modelled in the top-down frame as ``v = a*u**2 + b*u + c``
with ``a`` and ``b`` shared between the left and right line, which keeps
the two lines parallel (as offset curves) and leaves only the intercepts
free.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateInterval, IllConditioned, InsufficientData

MIN_POINTS = 3
MIN_SPAN = 5.0
MAX_COND = 1e12


@dataclass(frozen=True)
class Quadratic:
    a: float
    b: float
    c: float

    def __call__(self, u):
        return (self.a * u + self.b) * u + self.c

    def slope(self, u):
        return 2.0 * self.a * u + self.b


@dataclass(frozen=True)
class LaneModel:
    a: float
    b: float
    c_left: float
    c_right: float
    n_points_used: int = 0
    residual_rms: float = 0.0

    def left(self) -> Quadratic:
        return Quadratic(self.a, self.b, self.c_left)

    def right(self) -> Quadratic:
        return Quadratic(self.a, self.b, self.c_right)


@dataclass(frozen=True, eq=False)
class RlsState:
    """Exponentially forgotten normal equations over ``(a, b, c_left, c_right)``."""

    g: np.ndarray
    r: np.ndarray
    forgetting: float = 0.9


def _normal_equations(left, right):
    g = np.zeros((4, 4))
    r = np.zeros(4)
    for pts, col in ((left, 2), (right, 3)):
        if pts.shape[0] == 0:
            continue
        u, v = pts[:, 0], pts[:, 1]
        phi = np.zeros((pts.shape[0], 4))
        phi[:, 0] = u * u
        phi[:, 1] = u
        phi[:, col] = 1.0
        g += phi.T @ phi
        r += phi.T @ v
    return g, r


def _usable(pts):
    return pts.shape[0] >= MIN_POINTS and np.ptp(pts[:, 0]) >= MIN_SPAN


def fit_parallel(left, right, state: Optional[RlsState] = None, forgetting=0.9, ridge=1e-6):
    """Joint least-squares fit of both lane lines with shared ``a, b``.

    With a prior ``state`` the previous normal equations are decayed by the
    forgetting factor and added to this frame's. The ridge term keeps the
    system solvable when one side is empty; a single refinement step against
    the unregularised equations removes its bias along well-determined
    directions.
    """
    left = np.asarray(left, dtype=np.float64).reshape(-1, 2)
    right = np.asarray(right, dtype=np.float64).reshape(-1, 2)
    if state is None and not (_usable(left) and _usable(right)):
        raise InsufficientData(
            f"need >= {MIN_POINTS} points spanning >= {MIN_SPAN} m per line without a prior "
            f"(got {left.shape[0]} left, {right.shape[0]} right)"
        )
    g_now, r_now = _normal_equations(left, right)
    if state is not None:
        gamma = state.forgetting
        g = gamma * state.g + g_now
        r = gamma * state.r + r_now
    else:
        gamma = forgetting
        g, r = g_now, r_now
    reg = g + ridge * np.eye(4)
    if np.linalg.cond(reg) > MAX_COND:
        raise IllConditioned("lane normal equations are ill-conditioned")
    theta = np.linalg.solve(reg, r)
    theta = theta + np.linalg.solve(reg, r - g @ theta)
    a, b, cl, cr = (float(t) for t in theta)
    n = left.shape[0] + right.shape[0]
    rms = 0.0
    if n:
        res = [pts[:, 1] - ((a * pts[:, 0] + b) * pts[:, 0] + c) for pts, c in ((left, cl), (right, cr))]
        rms = float(np.sqrt(np.mean(np.concatenate(res) ** 2)))
    return LaneModel(a, b, cl, cr, n, rms), RlsState(g, r, gamma)


def middle_line(model: LaneModel) -> Quadratic:
    return Quadratic(model.a, model.b, 0.5 * (model.c_left + model.c_right))


def path_polynomial(middle: Quadratic, u_s: float, u_f: float, anchored: bool = False) -> Quadratic:
    """Quadratic through the middle line's start and end points, tangent at the start.

    When all three conditions come from the middle line itself the solution
    is the middle line; ``anchored`` replaces the start point with the host
    position (lateral 0) for a merge-in path.
    """
    if not u_f > u_s:
        raise DegenerateInterval(f"u_f ({u_f}) must exceed u_s ({u_s})")
    f_s = 0.0 if anchored else middle(u_s)
    f_f = middle(u_f)
    t_s = middle.slope(u_s)
    # f(u) = f_s + t_s (u - u_s) + k (u - u_s)^2, then k from the end point
    du = u_f - u_s
    k = (f_f - f_s - t_s * du) / (du * du)
    a = k
    b = t_s - 2.0 * k * u_s
    c = f_s - t_s * u_s + k * u_s * u_s
    return Quadratic(a, b, c)


def curvature(f: Quadratic, u_s: float, formula: str = "standard") -> float:
    """Signed curvature of ``f`` at ``u_s``; positive for left-bending lines.

    ``formula="unsquared"`` uses ``(1 + f')**1.5`` in the denominator
    instead of ``(1 + f'**2)**1.5``.
    """
    d1 = f.slope(u_s)
    d2 = 2.0 * f.a
    if formula == "unsquared":
        return d2 / (1.0 + d1) ** 1.5
    if formula != "standard":
        raise ValueError(f"unknown curvature formula {formula!r}")
    return d2 / (1.0 + d1 * d1) ** 1.5


def world_curvature(kappa0: float, beta: float = 1.0) -> float:
    if not beta > 0:
        raise ValueError("beta must be > 0")
    return beta * kappa0
