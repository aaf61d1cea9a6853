# Records passed between the solvers, the simulator and the CLI.

from __future__ import annotations

import json
from abc import ABC
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from geo_lqr.utils import to_jsonable


@dataclass(slots=True)
class DTO(ABC):
    def to_dict(self):
        return to_jsonable(asdict(self))

    def json(self):
        return json.dumps(self.to_dict(), indent=2)

    def __str__(self):
        return self.json()


@dataclass(slots=True)
class RigidBodyState(DTO):
    r: np.ndarray
    w: np.ndarray


@dataclass(slots=True)
class FlatState(DTO):
    q: np.ndarray
    v: np.ndarray


@dataclass(slots=True)
class CostParams(DTO):
    alpha: float = 1.0
    gamma: float = 0.0
    q_weights: np.ndarray = field(default_factory=lambda: np.eye(2))

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        self.q_weights = np.asarray(self.q_weights, dtype=float)


@dataclass(slots=True)
class RiccatiSolution(DTO):
    k1: float
    k2: float
    k3: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.k1, self.k3], [self.k3, self.k2]])

    @classmethod
    def from_matrix(cls, k: np.ndarray) -> RiccatiSolution:
        return cls(float(k[0, 0]), float(k[1, 1]), float(0.5 * (k[0, 1] + k[1, 0])))

    def is_positive_definite(self) -> bool:
        return self.k1 > 0.0 and self.k2 > 0.0 and self.k1 * self.k2 - self.k3**2 > 0.0


@dataclass(slots=True)
class GainPair(DTO):
    kP: float
    kD: float


@dataclass(slots=True)
class GainSchedule(DTO):
    """Riccati solutions on a uniform time grid ending at the horizon T.

    ``k`` has one row ``(k1, k2, k3)`` per grid time.
    """

    times: np.ndarray
    k: np.ndarray

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def at(self, t: float) -> RiccatiSolution:
        """Linear interpolation between grid points, clamped to [0, T]."""
        k1, k2, k3 = (float(np.interp(t, self.times, self.k[:, i])) for i in range(3))
        return RiccatiSolution(k1, k2, k3)

    def gains(self, t: float, alpha: float) -> GainPair:
        sol = self.at(t)
        return GainPair(sol.k3 / alpha, sol.k2 / alpha)


@dataclass(slots=True)
class SimParams(DTO):
    h: float = 1e-3
    t_end: float = 20.0
    inertia: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        if not 0.0 < self.h <= 0.01:
            raise ValueError(f"step must satisfy 0 < h <= 0.01, got {self.h}")
        if not self.t_end > 0.0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")


@dataclass(slots=True)
class TrajectoryLog(DTO):
    times: np.ndarray
    states: list
    torques: np.ndarray
    diagnostics: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.times)

    @property
    def rotations(self) -> np.ndarray:
        return np.stack([s.r for s in self.states])

    @property
    def omegas(self) -> np.ndarray:
        return np.stack([s.w for s in self.states])

    @property
    def final(self):
        return self.states[-1]


@dataclass(slots=True)
class VariationField(DTO):
    times: np.ndarray
    y: np.ndarray
    ydot: np.ndarray


@dataclass(slots=True)
class CostateTrajectory(DTO):
    times: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    hamiltonian: np.ndarray

    @property
    def hamiltonian_spread(self) -> float:
        return float(np.max(self.hamiltonian) - np.min(self.hamiltonian))


@dataclass(slots=True)
class Trajectory(DTO):
    """States and controls on a uniform grid.

    ``q`` holds configurations (``(N, n)`` in flat space, ``(N, 3, 3)`` on
    SO(3)); ``v`` and ``u`` are tangent vectors in body coordinates.
    """

    times: np.ndarray
    q: np.ndarray
    v: np.ndarray
    u: np.ndarray


@dataclass(slots=True)
class BVPSolution(Trajectory):
    """Solved boundary-value problem; ``udot`` is the covariant derivative of ``u``."""

    udot: np.ndarray | None
    residual: float
    iterations: int
    cost: float
    objective: float | None = None


@dataclass(slots=True)
class RunSummary(DTO):
    command: str
    gains: dict[str, float] | None = None
    final_distance: float | None = None
    final_velocity_norm: float | None = None
    min_clearance: float | None = None
    iterations: dict[str, int] = field(default_factory=dict)
    wall_clock_seconds: float = 0.0
    details: dict = field(default_factory=dict)

    def json(self):
        return json.dumps(self.to_dict(), indent=2, allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> RunSummary:
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})
