"""Backward costate integration with a Hamiltonian channel.

For identity actuation the adjoint system in body coordinates reads

    Dp₁/Dt = −A*(p₂) − grad_q L,    Dp₂/Dt = −p₁ − grad_v L,

with ``A*(p₂) = R(v, p₂)v + ∇_u p₂`` and ``p(T)`` the gradient of the
terminal cost. The Hamiltonian ``H = ⟨p₁, v⟩ + ⟨p₂, u⟩ + L`` is recorded at
every grid point.
"""

from __future__ import annotations

import numpy as np

from geo_lqr.dtos import CostateTrajectory, Trajectory
from geo_lqr.pmp.manifolds import ManifoldTag, get_manifold
from geo_lqr.pmp.scenario import Lagrangian


def costate_integrate(
    trajectory: Trajectory,
    lagrangian: Lagrangian,
    terminal_gradient: tuple[np.ndarray, np.ndarray],
    manifold: ManifoldTag = "flat",
) -> CostateTrajectory:
    space = get_manifold(manifold)
    times = np.asarray(trajectory.times, dtype=float)
    qs, vs, us = trajectory.q, np.asarray(trajectory.v), np.asarray(trajectory.u)
    n = vs.shape[-1]

    def rhs(q, v, u, p):
        p1, p2 = p[:n], p[n:]
        adjoint = space.curvature(v, p2, v) + space.connection(u, p2)
        p1_rate = -adjoint - lagrangian.grad_q(q, v, u) - space.connection(v, p1)
        p2_rate = -p1 - lagrangian.grad_v(q, v, u) - space.connection(v, p2)
        return np.concatenate([p1_rate, p2_rate])

    g_q, g_v = terminal_gradient
    ps = np.empty((len(times), 2 * n))
    ps[-1] = np.concatenate([np.asarray(g_q, dtype=float), np.asarray(g_v, dtype=float)])
    for i in range(len(times) - 1, 0, -1):
        dt = times[i - 1] - times[i]
        start = (qs[i], vs[i], us[i])
        end = (qs[i - 1], vs[i - 1], us[i - 1])
        mid = (
            space.project(0.5 * (qs[i] + qs[i - 1])),
            0.5 * (vs[i] + vs[i - 1]),
            0.5 * (us[i] + us[i - 1]),
        )
        p = ps[i]
        k1 = rhs(*start, p)
        k2 = rhs(*mid, p + 0.5 * dt * k1)
        k3 = rhs(*mid, p + 0.5 * dt * k2)
        k4 = rhs(*end, p + dt * k3)
        ps[i - 1] = p + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    p1, p2 = ps[:, :n], ps[:, n:]
    hamiltonian = np.array(
        [
            p1[i] @ vs[i] + p2[i] @ us[i] + lagrangian.value(qs[i], vs[i], us[i])
            for i in range(len(times))
        ]
    )
    return CostateTrajectory(times=times, p1=p1, p2=p2, hamiltonian=hamiltonian)


def minimization_residual(costate: CostateTrajectory, controls: np.ndarray, alpha: float) -> float:
    """``max_t |α u + p₂|``: zero where u minimizes the Hamiltonian pointwise."""
    return float(np.max(np.linalg.norm(alpha * np.asarray(controls) + costate.p2, axis=-1)))


def control_from_costate(costate: CostateTrajectory, alpha: float) -> np.ndarray:
    return -costate.p2 / alpha
