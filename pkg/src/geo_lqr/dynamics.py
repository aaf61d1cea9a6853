"""Rigid-body attitude dynamics, the Lie-Euler integrator and the flat double integrator."""

from __future__ import annotations

from typing import Callable

import numpy as np
import numpy.typing as npt
from loguru import logger

from geo_lqr.dtos import FlatState, RigidBodyState, SimParams, TrajectoryLog
from geo_lqr.errors import NumericalDivergence
from geo_lqr.so3 import InertiaTensor, exp_so3
from geo_lqr.utils import uniform_steps

MAX_ANGULAR_RATE = 1e6

Controller = Callable[[float, RigidBodyState], np.ndarray]
Diagnostics = Callable[[float, RigidBodyState, np.ndarray], dict[str, float]]
FlatController = Callable[[float, FlatState], np.ndarray]


def euler_rhs(w: npt.ArrayLike, tau: npt.ArrayLike, j: InertiaTensor) -> np.ndarray:
    """Body-frame angular acceleration ``J⁻¹(Jω × ω) + τ``."""
    w = np.asarray(w, dtype=float)
    return np.linalg.solve(j, np.cross(j @ w, w)) + np.asarray(tau, dtype=float)


def kinetic_energy(w: npt.ArrayLike, j: InertiaTensor) -> float:
    w = np.asarray(w, dtype=float)
    return float(0.5 * w @ j @ w)


def momentum_norm(w: npt.ArrayLike, j: InertiaTensor) -> float:
    return float(np.linalg.norm(j @ np.asarray(w, dtype=float)))


def lie_euler_step(
    s: RigidBodyState, tau: npt.ArrayLike, h: float, j: InertiaTensor
) -> RigidBodyState:
    """One explicit Lie-Euler step: ``R·exp(hω)``, ``ω + h·euler_rhs``."""
    if not h > 0.0:
        raise ValueError(f"step must be positive, got {h}")
    return RigidBodyState(
        r=s.r @ exp_so3(h * s.w),
        w=s.w + h * euler_rhs(s.w, tau, j),
    )


def simulate(
    controller: Controller,
    init: RigidBodyState,
    p: SimParams,
    diagnostics: Diagnostics | None = None,
) -> TrajectoryLog:
    """Run the closed loop on a uniform grid of ``ceil(t_end/h) + 1`` samples.

    The torque stored at sample i is the controller output applied on the
    step leaving it; the final sample records the controller output at the
    final state. Diagnostics channels come from the optional callback plus
    ``kinetic_energy``.

    Raises:
        NumericalDivergence: ``|ω|`` exceeds 1e6 rad/s.
    """
    n = uniform_steps(p.t_end, p.h)
    times = p.h * np.arange(n + 1)
    states: list[RigidBodyState] = []
    torques = np.zeros((n + 1, 3))
    channels: dict[str, list[float]] = {"kinetic_energy": []}

    logger.info("simulating {} steps at h={}", n, p.h)
    state = RigidBodyState(np.array(init.r, dtype=float), np.array(init.w, dtype=float))
    for i, t in enumerate(times):
        if not np.linalg.norm(state.w) <= MAX_ANGULAR_RATE:
            raise NumericalDivergence(f"|ω| exceeded {MAX_ANGULAR_RATE:g} rad/s at t={t:.6g}")
        tau = np.asarray(controller(t, state), dtype=float)
        states.append(state)
        torques[i] = tau
        channels["kinetic_energy"].append(kinetic_energy(state.w, p.inertia))
        if diagnostics is not None:
            for name, value in diagnostics(t, state, tau).items():
                channels.setdefault(name, []).append(value)
        if i < n:
            state = lie_euler_step(state, tau, p.h, p.inertia)

    logger.info("simulation finished at t={}", times[-1])
    return TrajectoryLog(
        times=times,
        states=states,
        torques=torques,
        diagnostics={k: np.asarray(v, dtype=float) for k, v in channels.items()},
    )


def _zero_gradient(q: np.ndarray) -> np.ndarray:
    return np.zeros_like(q)


def flat_step(
    s: FlatState,
    u: npt.ArrayLike,
    h: float,
    grad_W: Callable[[np.ndarray], np.ndarray] | None = None,
) -> FlatState:
    """Symplectic Euler: ``v' = v + h(−∇W(q) + u)``, then ``q' = q + h·v'``.

    Works on batched arrays too: leading axes of ``q``, ``v`` and ``u``
    broadcast.
    """
    if not h > 0.0:
        raise ValueError(f"step must be positive, got {h}")
    grad_W = grad_W or _zero_gradient
    v = s.v + h * (-grad_W(s.q) + u)
    return FlatState(q=s.q + h * v, v=v)


def simulate_flat(
    controller: FlatController,
    init: FlatState,
    h: float,
    steps: int,
    grad_W: Callable[[np.ndarray], np.ndarray] | None = None,
) -> TrajectoryLog:
    """Flat-space counterpart of :func:`simulate`; records kinetic energy ½|v|²."""
    times = h * np.arange(steps + 1)
    states: list[FlatState] = []
    controls = []
    state = FlatState(np.array(init.q, dtype=float), np.array(init.v, dtype=float))
    for i, t in enumerate(times):
        u = np.asarray(controller(t, state), dtype=float)
        states.append(state)
        controls.append(u)
        if i < steps:
            state = flat_step(state, u, h, grad_W)
    return TrajectoryLog(
        times=times,
        states=states,
        torques=np.asarray(controls),
        diagnostics={
            "kinetic_energy": np.array([0.5 * float(s.v @ s.v) for s in states])
        },
    )
