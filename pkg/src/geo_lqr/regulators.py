"""Geometric LQR regulation and PD + feedforward tracking on SO(3).

Besides the torque laws this module holds the certificates used to check
them: the Lyapunov function of the regulation loop, the quadratic value
candidate built from a Riccati solution and the HJB residual along a
sampled trajectory.
"""

from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable

import numpy as np
import numpy.typing as npt
from numpy.polynomial import Polynomial

from geo_lqr.dtos import GainPair, GainSchedule, RiccatiSolution, RigidBodyState
from geo_lqr.errors import AngleNearPi
from geo_lqr.so3 import (
    I3,
    InertiaTensor,
    Rotation,
    as_rotation,
    exp_so3,
    geodesic_distance,
    log_so3,
    transport_velocity,
    vee,
)

INJECTIVITY_MARGIN = 0.1


@dataclass(slots=True)
class RegulationGoal:
    r_d: Rotation


@dataclass(slots=True)
class ControllerConfig:
    """Gains (static or scheduled) and feedforward options.

    ``alpha`` converts a scheduled Riccati solution into gains.
    """

    gains: GainPair | GainSchedule
    feedforward_accel_term: bool = False
    alpha: float = 1.0

    def __post_init__(self):
        if isinstance(self.gains, GainPair) and not (self.gains.kP > 0 and self.gains.kD > 0):
            raise ValueError(f"static gains must be positive, got {self.gains}")

    def gains_at(self, t: float) -> GainPair:
        if isinstance(self.gains, GainSchedule):
            return self.gains.gains(t, self.alpha)
        return self.gains


class TrackingReference:
    """Reference attitude generated by Lie-Euler steps of ``R' = R·hat(ω_ref)``.

    Grid nodes ``k·h_ref`` are computed lazily and cached under a lock, so
    one reference can be shared between threads; an off-grid time gets a
    partial step from the node before it.
    """

    def __init__(
        self,
        omega_ref: Callable[[float], np.ndarray],
        omega_ref_dot: Callable[[float], np.ndarray],
        r0: npt.ArrayLike = I3,
        h_ref: float = 1e-3,
    ):
        if not h_ref > 0.0:
            raise ValueError(f"h_ref must be positive, got {h_ref}")
        self.omega_ref = omega_ref
        self.omega_ref_dot = omega_ref_dot
        self.h_ref = h_ref
        self.coefficients: list[list[float]] | None = None
        self._nodes: list[np.ndarray] = [as_rotation(r0)]
        self._lock = threading.Lock()

    @classmethod
    def from_polynomial(
        cls, coeffs: list[list[float]], r0: npt.ArrayLike = I3, h_ref: float = 1e-3
    ) -> TrackingReference:
        """Build ω_ref from per-axis coefficients in increasing powers of t."""
        if len(coeffs) != 3:
            raise ValueError("omega_ref needs one coefficient list per axis")
        polys = [Polynomial(c if len(c) else [0.0]) for c in coeffs]
        derivs = [p.deriv() for p in polys]

        def omega_ref(t: float) -> np.ndarray:
            return np.array([p(t) for p in polys], dtype=float)

        def omega_ref_dot(t: float) -> np.ndarray:
            return np.array([d(t) for d in derivs], dtype=float)

        ref = cls(omega_ref, omega_ref_dot, r0, h_ref)
        ref.coefficients = [list(map(float, c)) for c in coeffs]
        return ref

    def r_ref(self, t: float) -> Rotation:
        k = int(np.floor(t / self.h_ref + 1e-9))
        if k < 0:
            raise ValueError(f"reference is defined for t >= 0, got {t}")
        if len(self._nodes) <= k:
            with self._lock:
                while len(self._nodes) <= k:
                    i = len(self._nodes) - 1
                    w = self.omega_ref(i * self.h_ref)
                    self._nodes.append(self._nodes[i] @ exp_so3(self.h_ref * w))
        dt = t - k * self.h_ref
        if dt <= 0.0:
            return self._nodes[k]
        return self._nodes[k] @ exp_so3(dt * self.omega_ref(k * self.h_ref))


def regulation_torque(s: RigidBodyState, goal: RegulationGoal, g: GainPair) -> np.ndarray:
    return -g.kP * log_so3(goal.r_d.T @ s.r) - g.kD * s.w


def transported_reference(s: RigidBodyState, ref: TrackingReference, t: float) -> np.ndarray:
    """ω_t = Rᵀ R_ref ω_ref, the reference velocity seen in the body frame."""
    return transport_velocity(s.r, ref.r_ref(t), ref.omega_ref(t))


def tracking_pd_torque(
    s: RigidBodyState, ref: TrackingReference, t: float, g: GainPair
) -> np.ndarray:
    r_ref = ref.r_ref(t)
    w_t = transport_velocity(s.r, r_ref, ref.omega_ref(t))
    return -g.kP * log_so3(r_ref.T @ s.r) - g.kD * (s.w - w_t)


def feedforward_torque(
    s: RigidBodyState,
    ref: TrackingReference,
    t: float,
    j: InertiaTensor,
    cfg: ControllerConfig,
) -> np.ndarray:
    """``½(ω × ω_t − J⁻¹(Jω_t × ω + Jω × ω_t))``.

    ``Rᵀ R_ref ω̇_ref`` is added when ``feedforward_accel_term`` is set.
    """
    r_ref = ref.r_ref(t)
    w = s.w
    w_t = transport_velocity(s.r, r_ref, ref.omega_ref(t))
    gyro = np.linalg.solve(j, np.cross(j @ w_t, w) + np.cross(j @ w, w_t))
    tau = 0.5 * (np.cross(w, w_t) - gyro)
    if cfg.feedforward_accel_term:
        tau = tau + transport_velocity(s.r, r_ref, ref.omega_ref_dot(t))
    return tau


def tracking_torque(
    s: RigidBodyState,
    ref: TrackingReference,
    t: float,
    j: InertiaTensor,
    cfg: ControllerConfig,
) -> np.ndarray:
    return tracking_pd_torque(s, ref, t, cfg.gains_at(t)) + feedforward_torque(
        s, ref, t, j, cfg
    )


def lyapunov_value(s: RigidBodyState, goal: RegulationGoal, g: GainPair) -> float:
    """``kP·½d² + ½|ω|²``."""
    phi = log_so3(goal.r_d.T @ s.r)
    return float(0.5 * g.kP * phi @ phi + 0.5 * s.w @ s.w)


def tracking_lyapunov_value(
    s: RigidBodyState, ref: TrackingReference, t: float, g: GainPair
) -> float:
    r_ref = ref.r_ref(t)
    phi = log_so3(r_ref.T @ s.r)
    e = s.w - transport_velocity(s.r, r_ref, ref.omega_ref(t))
    return float(0.5 * g.kP * phi @ phi + 0.5 * e @ e)


def _quadratic_value(phi: np.ndarray, v: np.ndarray, sol: RiccatiSolution) -> float:
    return float(0.5 * sol.k1 * phi @ phi + 0.5 * sol.k2 * v @ v + sol.k3 * phi @ v)


def value_candidate(s: RigidBodyState, goal: RegulationGoal, sol: RiccatiSolution) -> float:
    """``k1·U + (k2/2)|ω|² + k3⟨grad U, ω⟩`` with grad U = log(R_dᵀR)."""
    return _quadratic_value(log_so3(goal.r_d.T @ s.r), s.w, sol)


def tracking_value_candidate(
    s: RigidBodyState, ref: TrackingReference, t: float, sol: RiccatiSolution
) -> float:
    r_ref = ref.r_ref(t)
    e = s.w - transport_velocity(s.r, r_ref, ref.omega_ref(t))
    return _quadratic_value(log_so3(r_ref.T @ s.r), e, sol)


def running_cost(
    s: RigidBodyState, goal: RegulationGoal, tau: npt.ArrayLike, alpha: float
) -> float:
    """``U + ½|ω|² + (α/2)|τ|²``, the Lagrangian of the regulation problem."""
    tau = np.asarray(tau, dtype=float)
    phi = log_so3(goal.r_d.T @ s.r)
    return float(0.5 * phi @ phi + 0.5 * s.w @ s.w + 0.5 * alpha * tau @ tau)


def hjb_residual(times: np.ndarray, values: np.ndarray, costs: np.ndarray) -> np.ndarray:
    """Central-difference ``dV/dt + L`` at the interior grid points."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    dv = (values[2:] - values[:-2]) / (times[2:] - times[:-2])
    return dv + np.asarray(costs, dtype=float)[1:-1]


def injectivity_guard(
    r0: Rotation, r_d: Rotation, margin: float = INJECTIVITY_MARGIN
) -> float:
    """Return d(r0, r_d), refusing starts within ``margin`` of the cut locus."""
    d = geodesic_distance(r0, r_d)
    if d >= np.pi - margin:
        raise AngleNearPi(
            f"initial distance {d:.6g} rad is within {margin} of the cut locus"
        )
    return d


def lyapunov_guard(
    s: RigidBodyState,
    goal: RegulationGoal,
    sol: RiccatiSolution,
    alpha: float,
    margin: float = INJECTIVITY_MARGIN,
) -> bool:
    """Whether ``d² + (α/k3)|ω|² < (π − margin)²``.

    Inside this level set the regulation Lyapunov function keeps the
    trajectory away from the cut locus.
    """
    phi = log_so3(goal.r_d.T @ s.r)
    level = phi @ phi + (alpha / sol.k3) * (s.w @ s.w)
    return bool(level < (np.pi - margin) ** 2)


def euclidean_kinematic_law(r: Rotation, r_d: Rotation) -> np.ndarray:
    """Extrinsic comparison law ``−vee(R_dᵀR − RᵀR_d)/√(1 + tr(R_dᵀR))``.

    A velocity command built from the Frobenius distance in the ambient
    matrix space, kept for side-by-side diagnostics.
    """
    e = r_d.T @ r
    denom = np.sqrt(max(1.0 + np.trace(e), 1e-12))
    return -2.0 * vee(e) / denom


class Controller(ABC):
    """Feedback law usable by :func:`geo_lqr.dynamics.simulate`."""

    def __init__(self, cfg: ControllerConfig):
        self.cfg = cfg

    def gains_at(self, t: float) -> GainPair:
        return self.cfg.gains_at(t)

    @abstractmethod
    def __call__(self, t: float, s: RigidBodyState) -> np.ndarray: ...


class RegulationController(Controller):
    def __init__(self, goal: RegulationGoal, cfg: ControllerConfig):
        super().__init__(cfg)
        self.goal = goal

    def __call__(self, t: float, s: RigidBodyState) -> np.ndarray:
        return regulation_torque(s, self.goal, self.gains_at(t))


class TrackingController(Controller):
    def __init__(self, ref: TrackingReference, inertia: InertiaTensor, cfg: ControllerConfig):
        super().__init__(cfg)
        self.ref = ref
        self.inertia = inertia

    def __call__(self, t: float, s: RigidBodyState) -> np.ndarray:
        return tracking_torque(s, self.ref, t, self.inertia, self.cfg)
