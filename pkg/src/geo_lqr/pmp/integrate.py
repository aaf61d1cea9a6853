# Classical RK4 for systems made of a configuration and a block of body vectors.
#
# On the rotation group the configuration stages are taken in the ambient
# 3x3 space and projected back after every stage.

from __future__ import annotations

from typing import Callable

import numpy as np

from geo_lqr.dtos import Trajectory
from geo_lqr.errors import NumericalDivergence
from geo_lqr.pmp.manifolds import Manifold, ManifoldTag, get_manifold
from geo_lqr.utils import uniform_steps

Rhs = Callable[[float, np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
"""``(t, q, x) -> (body velocity of q, dx/dt)``"""


def rk4_step(space: Manifold, rhs: Rhs, t: float, q: np.ndarray, x: np.ndarray, h: float):
    v1, k1 = rhs(t, q, x)
    a1 = space.ambient_rate(q, v1)
    q2 = space.project(q + 0.5 * h * a1)
    v2, k2 = rhs(t + 0.5 * h, q2, x + 0.5 * h * k1)
    a2 = space.ambient_rate(q2, v2)
    q3 = space.project(q + 0.5 * h * a2)
    v3, k3 = rhs(t + 0.5 * h, q3, x + 0.5 * h * k2)
    a3 = space.ambient_rate(q3, v3)
    q4 = space.project(q + h * a3)
    v4, k4 = rhs(t + h, q4, x + h * k3)
    a4 = space.ambient_rate(q4, v4)
    q_next = space.project(q + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4))
    x_next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return q_next, x_next


def rk4_path(
    space: Manifold, rhs: Rhs, q0: np.ndarray, x0: np.ndarray, horizon: float, h: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integrate on the uniform grid of ``ceil(horizon/h)`` steps ending at ``horizon``.

    Returns ``(times, qs, xs)``.

    Raises:
        NumericalDivergence: the vector block stops being finite.
    """
    n = uniform_steps(horizon, h)
    dt = horizon / n
    times = np.linspace(0.0, horizon, n + 1)
    qs = np.empty((n + 1, *np.shape(q0)))
    xs = np.empty((n + 1, len(x0)))
    q, x = np.array(q0, dtype=float), np.array(x0, dtype=float)
    qs[0], xs[0] = q, x
    for i in range(n):
        q, x = rk4_step(space, rhs, times[i], q, x, dt)
        if not np.all(np.isfinite(x)):
            raise NumericalDivergence(f"integration diverged at t={times[i + 1]:.6g}")
        qs[i + 1], xs[i + 1] = q, x
    return times, qs, xs


def rollout(
    tag: ManifoldTag,
    q0: np.ndarray,
    v0: np.ndarray,
    control: Callable[[float], np.ndarray],
    horizon: float,
    h: float = 1e-3,
) -> Trajectory:
    """Open-loop trajectory of ``Dv/dt = u(t)`` from ``(q0, v0)``."""
    space = get_manifold(tag)

    def rhs(t, q, v):
        return v, np.asarray(control(t), dtype=float) - space.connection(v, v)

    times, qs, vs = rk4_path(space, rhs, q0, v0, horizon, h)
    controls = np.array([control(t) for t in times], dtype=float)
    return Trajectory(times=times, q=qs, v=vs, u=controls)
