"""Propagation of first-order trajectory perturbations.

Along a base trajectory with body velocity ``v`` and control ``u``, a
variation ``Y`` of the configuration obeys

    D²Y/Dt² = R(v, Y)v + ∇_Y u − Hess W(q)·Y

with identity actuation. On SO(3) the body-frame control fields are left
invariant, so ``∇_Y u = ½ Y×u``; in flat space the term vanishes.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
import numpy.typing as npt

from geo_lqr.dtos import Trajectory, VariationField
from geo_lqr.pmp.manifolds import ManifoldTag, get_manifold

PotentialHessian = Callable[[np.ndarray], np.ndarray]


def variational_propagate(
    base: Trajectory,
    y0: npt.ArrayLike,
    ydot0: npt.ArrayLike,
    manifold: ManifoldTag = "flat",
    hess_w: PotentialHessian | None = None,
) -> VariationField:
    """Integrate ``(Y, DY/Dt)`` forward on the grid of ``base``.

    Base values between grid points are taken as the average of the two
    neighbours, which keeps the scheme second order in the grid spacing
    and exactly linear in ``(y0, ydot0)``.

    Args:
        base: trajectory with ``times``, ``q``, ``v``, ``u``.
        y0, ydot0: initial variation and its covariant derivative.
        manifold: tag of the configuration space.
        hess_w: Hessian of a potential acting on the base motion
            (flat space only).
    """
    space = get_manifold(manifold)
    if hess_w is not None and space.TAG != "flat":
        raise ValueError("potential Hessians are supported in flat space only")
    y0 = np.asarray(y0, dtype=float)
    ydot0 = np.asarray(ydot0, dtype=float)
    times = np.asarray(base.times, dtype=float)
    n = y0.shape[0]
    if ydot0.shape != y0.shape or np.shape(base.v)[-1] != n:
        raise ValueError("variation and base velocity must share one dimension")

    def rhs(q, v, u, x):
        y, z = x[:n], x[n:]
        y_rate = z - space.connection(v, y)
        z_rate = space.curvature(v, y, v) + space.connection(y, u) - space.connection(v, z)
        if hess_w is not None:
            z_rate = z_rate - hess_w(q) @ y
        return np.concatenate([y_rate, z_rate])

    xs = np.empty((len(times), 2 * n))
    xs[0] = np.concatenate([y0, ydot0])
    for i in range(len(times) - 1):
        dt = times[i + 1] - times[i]
        start = (base.q[i], base.v[i], base.u[i])
        end = (base.q[i + 1], base.v[i + 1], base.u[i + 1])
        mid = tuple(0.5 * (a + b) for a, b in zip(start, end))
        x = xs[i]
        k1 = rhs(*start, x)
        k2 = rhs(*mid, x + 0.5 * dt * k1)
        k3 = rhs(*mid, x + 0.5 * dt * k2)
        k4 = rhs(*end, x + dt * k3)
        xs[i + 1] = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    return VariationField(times=times, y=xs[:, :n], ydot=xs[:, n:])
