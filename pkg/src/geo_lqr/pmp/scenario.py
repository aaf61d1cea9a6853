"""Avoidance and finite-time regulation problems.

Two modes share one scenario record:

- ``avoidance``: minimize ``∫ U + ½|v|² + (α/2)|u|² + V dt`` with
  ``U = ½d(q*, q)²`` and the barrier ``V = Σ 1/O_i``; no terminal cost.
- ``regulation``: minimize ``∫ (α/2)|u|² dt + U(q(T)) + ½|v(T)|²``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Literal, Protocol

import numpy as np

from geo_lqr.errors import ObstacleContact
from geo_lqr.pmp.manifolds import Manifold, ManifoldTag, get_manifold
from geo_lqr.so3 import geodesic_distance, log_so3

Mode = Literal["avoidance", "regulation"]


class Obstacle(Protocol):
    def value(self, q: np.ndarray) -> np.ndarray | float: ...

    def gradient(self, q: np.ndarray) -> np.ndarray: ...


@dataclass(slots=True)
class SphereObstacle:
    """``O(q) = |q − c|² − ρ²`` in flat space; vectorised over leading axes."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        if not self.radius > 0.0:
            raise ValueError(f"obstacle radius must be positive, got {self.radius}")

    def value(self, q):
        d = np.asarray(q) - self.center
        return np.sum(d * d, axis=-1) - self.radius**2

    def gradient(self, q):
        return 2.0 * (np.asarray(q) - self.center)


@dataclass(slots=True)
class GeodesicBallObstacle:
    """``O(R) = d(R, C)² − ρ²`` on the rotation group."""

    center: np.ndarray
    radius: float

    def value(self, q):
        return geodesic_distance(self.center, q) ** 2 - self.radius**2

    def gradient(self, q):
        return 2.0 * log_so3(self.center.T @ q)


def moved_obstacle(obstacle, center):
    """Copy of a ball obstacle with a new center; other obstacles come back unchanged."""
    if isinstance(obstacle, (SphereObstacle, GeodesicBallObstacle)):
        return replace(obstacle, center=center)
    return obstacle


@dataclass(slots=True)
class Lagrangian:
    value: Callable[[np.ndarray, np.ndarray, np.ndarray], float]
    grad_q: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    grad_v: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(slots=True)
class TerminalCost:
    value: Callable[[np.ndarray, np.ndarray], float]
    gradient: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(slots=True)
class AvoidanceScenario:
    alpha: float
    q_star: np.ndarray
    q0: np.ndarray
    v0: np.ndarray
    horizon: float
    obstacles: list = field(default_factory=list)
    manifold: ManifoldTag = "flat"
    mode: Mode = "avoidance"

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.horizon > 0.0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.mode not in ("avoidance", "regulation"):
            raise ValueError(f"unknown mode {self.mode!r}")
        self.q_star = np.asarray(self.q_star, dtype=float)
        self.q0 = np.asarray(self.q0, dtype=float)
        self.v0 = np.asarray(self.v0, dtype=float)
        get_manifold(self.manifold)
        if self.v0.shape != (self.dimension,):
            raise ValueError(f"v0 must have dimension {self.dimension}")
        if self.obstacles and self.clearance(self.q0) <= 0.0:
            raise ValueError("initial configuration lies inside an obstacle")

    @property
    def space(self) -> Manifold:
        return get_manifold(self.manifold)

    @property
    def dimension(self) -> int:
        return 3 if self.manifold == "so3-biinvariant" else int(self.q0.shape[-1])

    def with_obstacles(self, obstacles: list) -> AvoidanceScenario:
        return replace(self, obstacles=list(obstacles))

    def clearance(self, q) -> float:
        """Smallest obstacle function value at ``q`` (inf without obstacles)."""
        if not self.obstacles:
            return float("inf")
        return float(min(np.min(o.value(q)) for o in self.obstacles))

    def _checked_values(self, q) -> list:
        values = [o.value(q) for o in self.obstacles]
        for i, val in enumerate(values):
            if np.any(np.asarray(val) <= 0.0):
                raise ObstacleContact(f"obstacle {i} reached (O = {float(np.min(val)):.3g})")
        return values

    def barrier(self, q) -> float:
        return float(sum(1.0 / val for val in self._checked_values(q)))

    def barrier_gradient(self, q) -> np.ndarray:
        """``grad V = −Σ grad O_i / O_i²``."""
        grad = np.zeros(self.dimension)
        for o, val in zip(self.obstacles, self._checked_values(q)):
            grad -= o.gradient(q) / val**2
        return grad

    def target_gradient(self, q) -> np.ndarray:
        return self.space.distance_gradient(q, self.q_star)

    def running_cost(self, q, v, u, barrier_weight: float = 1.0) -> float:
        if self.mode == "regulation":
            return float(0.5 * self.alpha * u @ u)
        value = self.space.half_distance_sq(q, self.q_star) + 0.5 * v @ v
        value += 0.5 * self.alpha * u @ u
        if self.obstacles and barrier_weight > 0.0:
            value += barrier_weight * self.barrier(q)
        return float(value)

    def terminal_cost(self, q, v) -> float:
        if self.mode == "regulation":
            return float(self.space.half_distance_sq(q, self.q_star) + 0.5 * v @ v)
        return 0.0

    def lagrangian(self) -> Lagrangian:
        zero = lambda q, v, u: np.zeros(self.dimension)  # noqa: E731
        if self.mode == "regulation":
            return Lagrangian(
                value=lambda q, v, u: self.running_cost(q, v, u), grad_q=zero, grad_v=zero
            )

        def grad_q(q, v, u):
            grad = self.target_gradient(q)
            if self.obstacles:
                grad = grad + self.barrier_gradient(q)
            return grad

        return Lagrangian(
            value=lambda q, v, u: self.running_cost(q, v, u),
            grad_q=grad_q,
            grad_v=lambda q, v, u: np.asarray(v, dtype=float),
        )

    def terminal(self) -> TerminalCost:
        if self.mode == "regulation":
            return TerminalCost(
                value=self.terminal_cost,
                gradient=lambda q, v: (self.target_gradient(q), np.asarray(v, dtype=float)),
            )
        zero = np.zeros(self.dimension)
        return TerminalCost(value=self.terminal_cost, gradient=lambda q, v: (zero, zero))


def avoidance_rhs(
    u: np.ndarray,
    udot: np.ndarray,
    q: np.ndarray,
    v: np.ndarray,
    scenario: AvoidanceScenario,
    barrier_weight: float = 1.0,
) -> np.ndarray:
    """Second covariant derivative of the optimal avoidance control.

    ``D²u/Dt² = R(v,u)v − (1/α)grad(U + V)(q) + (1/α)u`` with
    ``grad U = exp_q⁻¹`` pointing away from ``q*`` (``q − q*`` in flat
    space). ``udot`` does not enter; it is accepted so the signature
    matches the state of the control ODE. A zero ``barrier_weight`` ignores
    the obstacles entirely.

    Raises:
        ObstacleContact: some ``O_i(q) <= 0`` while the barrier is on.
    """
    space = scenario.space
    grad = scenario.target_gradient(q)
    if scenario.obstacles and barrier_weight > 0.0:
        grad = grad + barrier_weight * scenario.barrier_gradient(q)
    return space.curvature(v, u, v) + (u - grad) / scenario.alpha


def jacobi_rhs(u: np.ndarray, v: np.ndarray, scenario: AvoidanceScenario) -> np.ndarray:
    """Finite-time regulation control equation ``D²u/Dt² = R(v,u)v``."""
    return scenario.space.curvature(v, u, v)
