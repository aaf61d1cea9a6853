"""Direct transcription of the flat-space problems, used as an independent oracle.

The control is sampled on ``N`` uniform grid points, states follow from
symplectic Euler steps and the cost is the trapezoid rule over the grid.
Gradient descent with central finite differences and a backtracking line
search minimizes it.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np
import numpy.typing as npt
from loguru import logger

from geo_lqr.dtos import BVPSolution, FlatState
from geo_lqr.dynamics import flat_step
from geo_lqr.errors import NoDescent, ObstacleContact
from geo_lqr.pmp.scenario import AvoidanceScenario
from geo_lqr.utils import chunked


def _batch_cost(sc: AvoidanceScenario, controls: np.ndarray, dt: float) -> np.ndarray:
    """Transcribed cost of each control sequence in ``controls`` (shape ``(B, N, n)``).

    Sequences whose states touch an obstacle cost ``inf``.
    """
    batch, points, _ = controls.shape
    state = FlatState(
        q=np.broadcast_to(sc.q0, (batch, sc.dimension)).copy(),
        v=np.broadcast_to(sc.v0, (batch, sc.dimension)).copy(),
    )
    running = np.empty((batch, points))
    blocked = np.zeros(batch, dtype=bool)
    for k in range(points):
        u = controls[:, k]
        cost = 0.5 * sc.alpha * np.sum(u * u, axis=-1)
        if sc.mode == "avoidance":
            diff = state.q - sc.q_star
            cost += 0.5 * np.sum(diff * diff, axis=-1) + 0.5 * np.sum(state.v**2, axis=-1)
            for obstacle in sc.obstacles:
                value = obstacle.value(state.q)
                blocked |= value <= 0.0
                cost += 1.0 / np.where(value > 0.0, value, np.inf)
        running[:, k] = cost
        if k < points - 1:
            state = flat_step(state, u, dt)
    total = dt * (np.sum(running, axis=1) - 0.5 * (running[:, 0] + running[:, -1]))
    if sc.mode == "regulation":
        diff = state.q - sc.q_star
        total += 0.5 * np.sum(diff * diff, axis=-1) + 0.5 * np.sum(state.v**2, axis=-1)
    total[blocked] = np.inf
    return total


def trajectory_cost(
    scenario: AvoidanceScenario,
    times: npt.ArrayLike,
    controls: npt.ArrayLike,
    substeps: int = 20,
) -> float:
    """Cost of a sampled flat-space control on a refined grid.

    The control is interpolated linearly between samples; ``q'' = u`` is
    then integrated exactly on every sub-interval.

    Raises:
        ObstacleContact: the re-simulated path touches an obstacle.
    """
    sc = scenario
    times = np.asarray(times, dtype=float)
    controls = np.asarray(controls, dtype=float)
    fine_t = [times[0]]
    q, v = sc.q0.copy(), sc.v0.copy()
    u = controls[0]
    running = [sc.running_cost(q, v, u)]
    for k in range(len(times) - 1):
        d = (times[k + 1] - times[k]) / substeps
        for s in range(substeps):
            a = controls[k] + (controls[k + 1] - controls[k]) * s / substeps
            b = controls[k] + (controls[k + 1] - controls[k]) * (s + 1) / substeps
            q = q + v * d + d * d * (2.0 * a + b) / 6.0
            v = v + 0.5 * d * (a + b)
            fine_t.append(times[k] + (s + 1) * d)
            running.append(sc.running_cost(q, v, b))
    return float(np.trapezoid(running, fine_t) + sc.terminal_cost(q, v))


class TranscriptionOracle:
    MIN_POINTS = 50
    GTOL = 1e-6
    FTOL = 1e-10
    FD_STEP = 1e-6
    ARMIJO = 1e-4
    MAX_BACKTRACKS = 40
    MAX_ITERATIONS = 5000
    MAX_STALLS = 50

    def __init__(
        self,
        scenario: AvoidanceScenario,
        points: int,
        *,
        workers: int = 1,
        max_iterations: int | None = None,
    ):
        if scenario.manifold != "flat":
            raise ValueError("the transcription oracle supports flat space only")
        if points < self.MIN_POINTS:
            raise ValueError(f"need at least {self.MIN_POINTS} grid points, got {points}")
        self.scenario = scenario
        self.points = points
        self.workers = max(1, workers)
        self.max_iterations = max_iterations or self.MAX_ITERATIONS
        self.history: list[float] = []
        self.times = np.linspace(0.0, scenario.horizon, points)
        self.dt = scenario.horizon / (points - 1)

    def objective(self, u: np.ndarray) -> float:
        return float(_batch_cost(self.scenario, u[None], self.dt)[0])

    def gradient(self, u: np.ndarray) -> np.ndarray:
        """Central differences, all probes in one batch (split over ``workers``)."""
        size = u.size
        probes = np.repeat(u[None], 2 * size, axis=0).reshape(2 * size, -1)
        idx = np.arange(size)
        probes[idx, idx] += self.FD_STEP
        probes[size + idx, idx] -= self.FD_STEP
        probes = probes.reshape(2 * size, *u.shape)

        if self.workers > 1:
            batches = list(chunked(probes, -(-len(probes) // self.workers)))
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                values = np.concatenate(
                    list(pool.map(lambda b: _batch_cost(self.scenario, b, self.dt), batches))
                )
        else:
            values = _batch_cost(self.scenario, probes, self.dt)
        if not np.all(np.isfinite(values)):
            raise ObstacleContact("a finite-difference probe touched an obstacle")
        return ((values[:size] - values[size:]) / (2.0 * self.FD_STEP)).reshape(u.shape)

    def solve(self, initial_guess: npt.ArrayLike | None = None) -> BVPSolution:
        """
        Raises:
            NoDescent: the line search fails on 50 consecutive iterations.
            ObstacleContact: the initial guess touches an obstacle.
        """
        sc = self.scenario
        shape = (self.points, sc.dimension)
        u = np.zeros(shape) if initial_guess is None else np.array(initial_guess, dtype=float)
        if u.shape != shape:
            raise ValueError(f"initial guess must have shape {shape}")
        f = self.objective(u)
        if not np.isfinite(f):
            raise ObstacleContact("initial control guess touches an obstacle")

        first_step = 1.0 / (sc.alpha * self.dt)
        step, stalls, iterations = first_step, 0, 0
        grad_norm = float("inf")
        self.history = [f]
        while iterations < self.max_iterations:
            g = self.gradient(u)
            grad_norm = float(np.linalg.norm(g))
            if grad_norm <= self.GTOL:
                break
            iterations += 1
            trial_step = step
            for _ in range(self.MAX_BACKTRACKS):
                candidate = u - trial_step * g
                f_new = self.objective(candidate)
                if f_new <= f - self.ARMIJO * trial_step * grad_norm**2:
                    break
                trial_step *= 0.5
            else:
                stalls += 1
                step = first_step
                logger.debug("line search stalled ({} in a row)", stalls)
                if stalls >= self.MAX_STALLS:
                    raise NoDescent(f"line search stalled {stalls} consecutive iterations")
                continue

            stalls = 0
            decrease = f - f_new
            u, f = candidate, f_new
            self.history.append(f)
            step = 2.0 * trial_step
            logger.debug("oracle iter {}: J={:.10g}, |g|={:.3e}", iterations, f, grad_norm)
            if decrease <= self.FTOL * max(abs(f), 1.0):
                break
        else:
            logger.warning("oracle stopped after {} iterations, |g|={:.3e}", iterations, grad_norm)

        cost = trajectory_cost(sc, self.times, u)
        logger.info(
            "oracle finished: {} iterations, objective={:.6g}, cost={:.6g}", iterations, f, cost
        )
        states = self._states(u)
        return BVPSolution(
            times=self.times,
            q=states.q,
            v=states.v,
            u=u,
            udot=None,
            residual=grad_norm,
            iterations=iterations,
            cost=cost,
            objective=f,
        )

    def _states(self, u: np.ndarray) -> FlatState:
        sc = self.scenario
        qs, vs = [sc.q0.copy()], [sc.v0.copy()]
        state = FlatState(sc.q0.copy(), sc.v0.copy())
        for k in range(self.points - 1):
            state = flat_step(state, u[k], self.dt)
            qs.append(state.q)
            vs.append(state.v)
        return FlatState(q=np.array(qs), v=np.array(vs))


def transcription_oracle(scenario: AvoidanceScenario, points: int, **options) -> BVPSolution:
    return TranscriptionOracle(scenario, points, **options).solve()
