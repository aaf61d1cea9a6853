"""Single shooting for the optimal-control boundary-value problems.

The unknowns are the initial control and its covariant derivative
``(u(0), Du/Dt(0))``. The coupled system

    Dv/Dt = u,    D²u/Dt² = F(u, Du/Dt, q, v)

is integrated with RK4 and Newton drives the terminal residual to zero:

- avoidance: ``u(T) = 0`` and ``Du/Dt(T) = v(T)/α``
- regulation: ``u(T) = −v(T)/α`` and ``Du/Dt(T) = grad U(q(T))/α``

Obstacles are brought in by continuation. The problem is first solved with
the barrier off. Every ball obstacle closer than twice its radius to that
path is then moved sideways until it clears it, the barrier weight is
raised from 0 to 1, and the obstacles slide back to where they belong.
Each stage is warm-started from the last and a failed stage is retried
with half the step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from loguru import logger

from geo_lqr.dtos import BVPSolution
from geo_lqr.errors import NoConvergence, NumericalDivergence, ObstacleContact
from geo_lqr.pmp.integrate import rk4_path
from geo_lqr.pmp.scenario import (
    AvoidanceScenario,
    GeodesicBallObstacle,
    SphereObstacle,
    avoidance_rhs,
    jacobi_rhs,
    moved_obstacle,
)


@dataclass(slots=True)
class ObstacleMove:
    """Obstacle center written as ``exp_anchor((delta + shift)·direction)``.

    ``shift = 0`` is the true position.
    """

    anchor: np.ndarray
    direction: np.ndarray
    delta: float
    shift: float


def _normal(e: np.ndarray) -> np.ndarray | None:
    """A unit vector orthogonal to ``e``, or None in one dimension."""
    n = len(e)
    if n < 2:
        return None
    norm = float(np.linalg.norm(e))
    if norm < 1e-12:
        return np.eye(n)[1]
    e = e / norm
    k = int(np.argmin(np.abs(e)))
    b = np.eye(n)[k] - e[k] * e
    return b / np.linalg.norm(b)


class ShootingSolver:
    TOLERANCE = 1e-6
    MAX_ITERATIONS = 100
    STEP = 1e-3
    FD_STEP = 1e-7
    MIN_DAMPING = 1.0 / 1024.0
    HOMOTOPY_STEPS = 4
    MAX_HALVINGS = 6
    CLEARANCE_FACTOR = 2.0

    def __init__(
        self,
        scenario: AvoidanceScenario,
        *,
        h: float | None = None,
        tolerance: float | None = None,
        max_iterations: int | None = None,
        homotopy_steps: int | None = None,
    ):
        self.scenario = scenario
        self.h = h or self.STEP
        self.tolerance = tolerance or self.TOLERANCE
        self.max_iterations = max_iterations or self.MAX_ITERATIONS
        self.homotopy_steps = homotopy_steps or self.HOMOTOPY_STEPS
        self._space = scenario.space
        self._n = scenario.dimension

    def _rhs(self, sc: AvoidanceScenario, weight: float):
        space, n = self._space, self._n

        def rhs(t, q, x):
            v, u, w = x[:n], x[n : 2 * n], x[2 * n :]
            if sc.mode == "regulation":
                accel = jacobi_rhs(u, v, sc)
            else:
                accel = avoidance_rhs(u, w, q, v, sc, barrier_weight=weight)
            x_rate = np.concatenate(
                [
                    u - space.connection(v, v),
                    w - space.connection(v, u),
                    accel - space.connection(v, w),
                ]
            )
            return v, x_rate

        return rhs

    def integrate(
        self, z: npt.ArrayLike, weight: float = 1.0, scenario: AvoidanceScenario | None = None
    ):
        """Roll out the coupled system from ``z = (u(0), Du/Dt(0))``.

        Returns ``(times, qs, xs)`` with rows ``x = (v, u, Du/Dt)``.
        """
        sc = self.scenario if scenario is None else scenario
        x0 = np.concatenate([sc.v0, np.asarray(z, dtype=float)])
        return rk4_path(self._space, self._rhs(sc, weight), sc.q0, x0, sc.horizon, self.h)

    def terminal_residual(self, q_end: np.ndarray, x_end: np.ndarray) -> np.ndarray:
        sc, n = self.scenario, self._n
        v, u, w = x_end[:n], x_end[n : 2 * n], x_end[2 * n :]
        if sc.mode == "regulation":
            return np.concatenate([u + v / sc.alpha, w - sc.target_gradient(q_end) / sc.alpha])
        return np.concatenate([u, w - v / sc.alpha])

    def residual(
        self, z: npt.ArrayLike, weight: float = 1.0, scenario: AvoidanceScenario | None = None
    ) -> np.ndarray:
        _, qs, xs = self.integrate(z, weight, scenario)
        return self.terminal_residual(qs[-1], xs[-1])

    def _jacobian(self, z, r, weight, sc) -> np.ndarray:
        jac = np.empty((len(r), len(z)))
        for j in range(len(z)):
            dz = np.zeros_like(z)
            dz[j] = self.FD_STEP * max(1.0, abs(z[j]))
            jac[:, j] = (self.residual(z + dz, weight, sc) - r) / dz[j]
        return jac

    def _newton(
        self, z: np.ndarray, weight: float, sc: AvoidanceScenario | None = None
    ) -> tuple[np.ndarray, float, int]:
        r = self.residual(z, weight, sc)
        norm = float(np.linalg.norm(r))
        iterations = 0
        while norm > self.tolerance:
            if iterations >= self.max_iterations:
                raise NoConvergence(
                    f"shooting residual {norm:.3e} after {self.max_iterations} Newton iterations"
                )
            iterations += 1
            step, *_ = np.linalg.lstsq(self._jacobian(z, r, weight, sc), -r, rcond=None)
            damping = 1.0
            while damping >= self.MIN_DAMPING:
                trial = z + damping * step
                try:
                    r_trial = self.residual(trial, weight, sc)
                except (ObstacleContact, NumericalDivergence):
                    damping *= 0.5
                    continue
                if np.linalg.norm(r_trial) < norm:
                    break
                damping *= 0.5
            else:
                raise NoConvergence(
                    f"damped Newton step stalled at residual {norm:.3e} (weight {weight:g})"
                )
            z, r = trial, r_trial
            norm = float(np.linalg.norm(r))
            logger.debug(
                "newton iter {}: residual={:.3e}, damping={:g}, weight={:g}",
                iterations,
                norm,
                damping,
                weight,
            )
        return z, norm, iterations

    def clearing_moves(self, qs: np.ndarray, xs: np.ndarray) -> list[ObstacleMove | None]:
        """How far each obstacle must be moved to sit ``2ρ`` away from the path ``qs``.

        ``None`` marks obstacles that are already clear, are not balls, or
        cannot be passed (one-dimensional space).
        """
        space, n = self._space, self._n
        moves: list[ObstacleMove | None] = []
        for o in self.scenario.obstacles:
            if not isinstance(o, (SphereObstacle, GeodesicBallObstacle)):
                moves.append(None)
                continue
            offsets = np.array([space.difference(q, o.center) for q in qs])
            dist = np.linalg.norm(offsets, axis=1)
            target = self.CLEARANCE_FACTOR * o.radius
            i = int(np.argmin(dist))
            delta = float(dist[i])
            if delta >= target:
                moves.append(None)
                continue
            direction = offsets[i] / delta if delta > 1e-9 else _normal(xs[i, :n])
            if direction is None:
                moves.append(None)
                continue

            shift = target - delta
            for _ in range(8):
                center = space.advance(qs[i], (delta + shift) * direction)
                nearest = min(float(np.linalg.norm(space.difference(q, center))) for q in qs)
                if nearest >= target * (1.0 - 1e-9):
                    break
                shift += target - nearest
            moves.append(ObstacleMove(qs[i], direction, delta, shift))
        return moves

    def stage(
        self, moves: list[ObstacleMove | None], s: float
    ) -> tuple[AvoidanceScenario, float]:
        """Scenario and barrier weight at continuation parameter ``s`` in ``[0, 1]``.

        The weight rises over ``[0, ½]`` with the obstacles moved clear; the
        obstacles slide back over ``[½, 1]``.
        """
        weight = min(1.0, 2.0 * s)
        slide = max(0.0, 2.0 * s - 1.0)
        if slide >= 1.0 or all(m is None for m in moves):
            return self.scenario, weight
        obstacles = [
            o
            if m is None
            else moved_obstacle(
                o, self._space.advance(m.anchor, (m.delta + (1.0 - slide) * m.shift) * m.direction)
            )
            for o, m in zip(self.scenario.obstacles, moves)
        ]
        return self.scenario.with_obstacles(obstacles), weight

    def _continue(
        self, z: np.ndarray, moves: list[ObstacleMove | None]
    ) -> tuple[np.ndarray, float, int]:
        end = 1.0 if any(m is not None for m in moves) else 0.5
        base = 0.5 / self.homotopy_steps
        s, ds, total, norm = 0.0, base, 0, float("inf")
        while s < end:
            target = min(end, s + ds)
            sc, weight = self.stage(moves, target)
            try:
                z_next, norm_next, used = self._newton(z, weight, sc)
            except (NoConvergence, ObstacleContact, NumericalDivergence, ValueError) as e:
                ds *= 0.5
                if ds < base / 2**self.MAX_HALVINGS:
                    raise NoConvergence(
                        f"obstacle continuation stalled at s={s:.4g}: {e}"
                    ) from e
                logger.debug("continuation step to s={:.4g} failed ({}), halving", target, e)
                continue
            z, norm, s = z_next, norm_next, target
            total += used
            ds = min(2.0 * ds, base)
        return z, norm, total

    def solve(self, initial_guess: npt.ArrayLike | None = None) -> BVPSolution:
        """
        ``max_iterations`` bounds every Newton solve, including each
        continuation stage.

        Raises:
            NoConvergence: a Newton solve spends its budget or stalls, or the
                obstacle continuation cannot make progress.
        """
        sc, n = self.scenario, self._n
        z = np.zeros(2 * n) if initial_guess is None else np.array(initial_guess, dtype=float)
        if sc.obstacles and sc.mode == "avoidance":
            z, norm, total = self._newton(z, 0.0)
            _, qs, xs = self.integrate(z, 0.0)
            moves = self.clearing_moves(qs, xs)
            logger.debug(
                "{} of {} obstacles moved clear of the free path",
                sum(m is not None for m in moves),
                len(moves),
            )
            z, norm, used = self._continue(z, moves)
            total += used
        else:
            z, norm, total = self._newton(z, 1.0)

        times, qs, xs = self.integrate(z)
        v, u, w = xs[:, :n], xs[:, n : 2 * n], xs[:, 2 * n :]
        cost = self.cost(times, qs, v, u)
        logger.info(
            "shooting converged: {} iterations, residual={:.3e}, cost={:.6g}", total, norm, cost
        )
        return BVPSolution(
            times=times, q=qs, v=v, u=u, udot=w, residual=norm, iterations=total, cost=cost
        )

    def cost(self, times: np.ndarray, qs: np.ndarray, v: np.ndarray, u: np.ndarray) -> float:
        """Trapezoid rule over the samples plus the terminal cost."""
        sc = self.scenario
        running = np.array([sc.running_cost(qs[i], v[i], u[i]) for i in range(len(times))])
        return float(np.trapezoid(running, times) + sc.terminal_cost(qs[-1], v[-1]))


def shooting_solve(scenario: AvoidanceScenario, **options) -> BVPSolution:
    return ShootingSolver(scenario, **options).solve()
