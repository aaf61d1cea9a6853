from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from geo_lqr.dtos import GainPair, GainSchedule, RiccatiSolution, RigidBodyState, SimParams
from geo_lqr.dynamics import simulate
from geo_lqr.errors import AngleNearPi
from geo_lqr.regulators import (
    ControllerConfig,
    RegulationController,
    RegulationGoal,
    TrackingController,
    TrackingReference,
    euclidean_kinematic_law,
    feedforward_torque,
    hjb_residual,
    injectivity_guard,
    lyapunov_guard,
    lyapunov_value,
    regulation_torque,
    running_cost,
    tracking_lyapunov_value,
    tracking_pd_torque,
    tracking_value_candidate,
    transported_reference,
    value_candidate,
)
from geo_lqr.so3 import I3, exp_so3, geodesic_distance, log_so3
from utils import random_rotation

REGULATION = GainPair(1.4142, 2.7671)
TRACKING = GainPair(8.7852, 8.3357)
J = np.diag([1.0, 2.0, 3.0])


def linear_reference(h_ref: float = 1e-3) -> TrackingReference:
    return TrackingReference.from_polynomial([[0.0, 0.5], [0.0, 0.3], [0.0, 0.4]], h_ref=h_ref)


def constant_reference(w, r0=I3, h_ref: float = 1e-3) -> TrackingReference:
    return TrackingReference.from_polynomial([[c] for c in w], r0, h_ref)


class TestRegulationTorque:
    """REGULATION TORQUE"""

    def test_zero_at_goal(self):
        """should vanish at the goal with zero velocity"""
        s = RigidBodyState(I3, np.zeros(3))
        assert np.array_equal(regulation_torque(s, RegulationGoal(I3), REGULATION), np.zeros(3))

    def test_pure_derivative_action(self):
        """should give -kD w when the attitude is on the goal"""
        s = RigidBodyState(I3, np.array([1.0, 0.0, 0.0]))
        tau = regulation_torque(s, RegulationGoal(I3), REGULATION)
        assert np.allclose(tau, [-2.7671, 0.0, 0.0])

    def test_pure_proportional_action(self):
        """should give -kP log(R_d^T R) for a single-axis error"""
        s = RigidBodyState(exp_so3([0.3, 0.0, 0.0]), np.zeros(3))
        tau = regulation_torque(s, RegulationGoal(I3), REGULATION)
        assert np.allclose(tau, [-0.42426, 0.0, 0.0], atol=1e-5)

    def test_gauge_invariance(self, rng):
        """should keep its norm when state and goal are conjugated by a fixed rotation"""
        r, r_d, g = (random_rotation(rng, 1.0) for _ in range(3))
        w = rng.normal(size=3)
        tau = regulation_torque(RigidBodyState(r, w), RegulationGoal(r_d), REGULATION)
        moved = regulation_torque(
            RigidBodyState(g @ r @ g.T, g @ w), RegulationGoal(g @ r_d @ g.T), REGULATION
        )
        assert np.linalg.norm(moved) == pytest.approx(np.linalg.norm(tau))

    def test_near_half_turn(self):
        """should propagate AngleNearPi from the logarithm"""
        s = RigidBodyState(exp_so3([np.pi - 1e-9, 0.0, 0.0]), np.zeros(3))
        with pytest.raises(AngleNearPi):
            regulation_torque(s, RegulationGoal(I3), REGULATION)


class TestTrackingReference:
    """TRACKING REFERENCE"""

    def test_polynomial_coefficients(self):
        """should evaluate omega_ref and its derivative from increasing powers of t"""
        ref = linear_reference()
        assert np.allclose(ref.omega_ref(2.0), [1.0, 0.6, 0.8])
        assert np.allclose(ref.omega_ref_dot(7.0), [0.5, 0.3, 0.4])
        zero = TrackingReference.from_polynomial([[], [], []])
        assert np.array_equal(zero.omega_ref(3.0), np.zeros(3))

    def test_lie_euler_nodes(self):
        """should chain exp(h omega_ref(t_i)) from the initial attitude"""
        h = 1e-2
        ref = linear_reference(h)
        expected = I3
        for i in range(10):
            expected = expected @ exp_so3(h * ref.omega_ref(i * h))
        assert np.allclose(ref.r_ref(10 * h), expected, atol=1e-14)

    def test_constant_velocity_is_exact(self, rng):
        """should reproduce R0 exp(t w) on and off the grid for a constant reference"""
        w = rng.normal(size=3)
        r0 = random_rotation(rng)
        ref = constant_reference(w, r0, h_ref=1e-2)
        for t in (0.0, 0.37, 1.0, 2.345):
            assert np.allclose(ref.r_ref(t), r0 @ exp_so3(t * w), atol=1e-12)

    def test_shared_between_threads(self):
        """should give every thread the attitudes a single-threaded reference gives"""
        times = np.linspace(0.0, 5.0, 400)
        expected = [linear_reference(1e-3).r_ref(t) for t in times]
        shared = linear_reference(1e-3)
        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(shared.r_ref, times[::-1]))[::-1]
        for got, want in zip(results, expected):
            np.testing.assert_array_equal(got, want)
        assert len(shared._nodes) == 5001

    def test_rejects_negative_time(self):
        """should refuse times before the start of the reference"""
        with pytest.raises(ValueError):
            linear_reference().r_ref(-0.5)

    def test_rejects_bad_axes(self):
        """should need exactly one coefficient list per axis"""
        with pytest.raises(ValueError):
            TrackingReference.from_polynomial([[1.0], [2.0]])
        with pytest.raises(ValueError):
            linear_reference(h_ref=0.0)

    def test_compatibility_identity(self, rng):
        """should give d/dt 1/2 d^2(R_ref(t), R) = -<log(R_ref^T R), w_t> for fixed R"""
        w = 0.5 * rng.normal(size=3)
        ref = constant_reference(w, h_ref=1e-3)
        r = exp_so3([0.4, -0.3, 0.2])
        t, dt = 0.5, 1e-4

        def half_sq(time):
            return 0.5 * geodesic_distance(ref.r_ref(time), r) ** 2

        derivative = (half_sq(t + dt) - half_sq(t - dt)) / (2 * dt)
        s = RigidBodyState(r, np.zeros(3))
        phi = log_so3(ref.r_ref(t).T @ r)
        assert derivative == pytest.approx(-phi @ transported_reference(s, ref, t), abs=1e-5)


class TestTrackingTorque:
    """TRACKING TORQUE"""

    def test_zero_on_reference(self):
        """should vanish when the body follows the reference exactly"""
        ref = linear_reference()
        t = 0.3
        s = RigidBodyState(ref.r_ref(t), ref.omega_ref(t))
        assert np.allclose(tracking_pd_torque(s, ref, t, TRACKING), 0.0, atol=1e-12)

    def test_velocity_error(self):
        """should give -kD (w - w_t) on the reference attitude"""
        ref = constant_reference([0.0, 0.0, 0.0])
        s = RigidBodyState(I3, np.array([0.0, 1.0, 0.0]))
        assert np.allclose(tracking_pd_torque(s, ref, 0.0, TRACKING), [0.0, -8.3357, 0.0])

    def test_reduces_to_regulation(self, rng):
        """should match regulation toward r_ref when the reference is at rest"""
        r0 = random_rotation(rng, 1.0)
        ref = constant_reference([0.0, 0.0, 0.0], r0)
        s = RigidBodyState(random_rotation(rng, 1.0), rng.normal(size=3))
        expected = regulation_torque(s, RegulationGoal(r0), TRACKING)
        assert np.allclose(tracking_pd_torque(s, ref, 1.2, TRACKING), expected)

    def test_feedforward_vanishes_without_reference_motion(self, rng):
        """should return zero for omega_ref = 0 with the acceleration term off"""
        ref = constant_reference([0.0, 0.0, 0.0])
        s = RigidBodyState(random_rotation(rng, 1.0), rng.normal(size=3))
        cfg = ControllerConfig(TRACKING)
        assert np.array_equal(feedforward_torque(s, ref, 0.5, J, cfg), np.zeros(3))

    def test_feedforward_cross_products(self):
        """should evaluate to [0, 0, 0.5] for w = e1, w_ref = e2 and J = I"""
        ref = constant_reference([0.0, 1.0, 0.0])
        s = RigidBodyState(I3, np.array([1.0, 0.0, 0.0]))
        tau = feedforward_torque(s, ref, 0.0, I3, ControllerConfig(TRACKING))
        assert np.allclose(tau, [0.0, 0.0, 0.5])

    def test_feedforward_acceleration_term(self, rng):
        """should add R^T R_ref d/dt omega_ref when the flag is set"""
        ref = linear_reference()
        s = RigidBodyState(random_rotation(rng, 1.0), rng.normal(size=3))
        t = 0.8
        plain = feedforward_torque(s, ref, t, J, ControllerConfig(TRACKING))
        full = feedforward_torque(s, ref, t, J, ControllerConfig(TRACKING, True))
        expected = s.r.T @ ref.r_ref(t) @ ref.omega_ref_dot(t)
        assert np.allclose(full - plain, expected)

    def test_exact_initialization_stays_on_reference(self):
        """should track a linear reference within 1e-3 over [0, 5] from an exact start"""
        ref = linear_reference()
        controller = TrackingController(ref, J, ControllerConfig(TRACKING, True))
        init = RigidBodyState(I3, ref.omega_ref(0.0))
        log = simulate(
            controller,
            init,
            SimParams(h=1e-3, t_end=5.0, inertia=J),
            lambda t, s, tau: {"dist": geodesic_distance(ref.r_ref(t), s.r)},
        )
        assert np.max(log.diagnostics["dist"]) <= 1e-3


class TestCertificates:
    """LYAPUNOV AND VALUE"""

    def test_lyapunov_plug_in(self):
        """should give kP d^2/2 + |w|^2/2"""
        s = RigidBodyState(exp_so3([0.3, 0.0, 0.0]), np.zeros(3))
        assert lyapunov_value(s, RegulationGoal(I3), GainPair(2.0, 1.0)) == pytest.approx(0.09)
        at_goal = RigidBodyState(I3, np.zeros(3))
        assert lyapunov_value(at_goal, RegulationGoal(I3), GainPair(2.0, 1.0)) == 0.0

    def test_value_candidate(self):
        """should reduce to k1 d^2/2 at rest and vanish at the goal"""
        sol = RiccatiSolution(0.97831, 1.38357, 0.70711)
        s = RigidBodyState(exp_so3([0.0, 0.5, 0.0]), np.zeros(3))
        assert value_candidate(s, RegulationGoal(I3), sol) == pytest.approx(0.97831 * 0.125)
        at_goal = RigidBodyState(I3, np.zeros(3))
        assert value_candidate(at_goal, RegulationGoal(I3), sol) == 0.0

    def test_tracking_certificates_on_reference(self):
        """should vanish on the reference"""
        ref = linear_reference()
        t = 0.25
        s = RigidBodyState(ref.r_ref(t), ref.omega_ref(t))
        sol = RiccatiSolution(19.045, 8.3357, 8.7852)
        assert tracking_lyapunov_value(s, ref, t, TRACKING) == pytest.approx(0.0, abs=1e-20)
        assert tracking_value_candidate(s, ref, t, sol) == pytest.approx(0.0, abs=1e-20)

    def test_running_cost(self):
        """should add the control penalty alpha/2 |tau|^2"""
        s = RigidBodyState(I3, np.array([0.0, 2.0, 0.0]))
        assert running_cost(s, RegulationGoal(I3), [1.0, 0.0, 0.0], 0.5) == pytest.approx(2.25)

    def test_hjb_residual(self):
        """should vanish when dV/dt = -L exactly"""
        times = np.linspace(0.0, 1.0, 11)
        residual = hjb_residual(times, -(times**2), 2 * times)
        assert residual.shape == (9,)
        assert np.allclose(residual, 0.0, atol=1e-12)

    def test_lyapunov_decreases(self):
        """should keep the Lyapunov channel non-increasing once the body is moving"""
        goal = RegulationGoal(I3)
        controller = RegulationController(goal, ControllerConfig(REGULATION))
        init = RigidBodyState(exp_so3([0.9, -0.4, 0.2]), np.zeros(3))
        log = simulate(
            controller,
            init,
            SimParams(h=1e-3, t_end=5.0),
            lambda t, s, tau: {"lyap": lyapunov_value(s, goal, REGULATION)},
        )
        lyap = log.diagnostics["lyap"][log.times >= 0.1]
        assert np.all(np.diff(lyap) <= 1e-12)
        assert lyap[-1] < 0.05 * lyap[0]


class TestGuards:
    """GUARDS"""

    def test_injectivity_guard(self):
        """should return the distance and refuse starts close to the cut locus"""
        assert injectivity_guard(exp_so3([1.0, 0.0, 0.0]), I3) == pytest.approx(1.0)
        with pytest.raises(AngleNearPi):
            injectivity_guard(exp_so3([0.0, np.pi - 0.05, 0.0]), I3)

    def test_lyapunov_guard(self):
        """should accept small level sets and reject ones reaching the cut locus"""
        sol = RiccatiSolution(0.97831, 1.38357, 0.70711)
        goal = RegulationGoal(I3)
        assert lyapunov_guard(RigidBodyState(I3, np.zeros(3)), goal, sol, 0.5)
        fast = RigidBodyState(exp_so3([2.5, 0.0, 0.0]), np.array([3.0, 0.0, 0.0]))
        assert not lyapunov_guard(fast, goal, sol, 0.5)

    def test_euclidean_kinematic_law(self):
        """should give -2 sin(theta/2) along the axis of a single-axis error"""
        r = exp_so3([0.0, 0.0, 0.6])
        assert np.allclose(euclidean_kinematic_law(r, I3), [0.0, 0.0, -2.0 * np.sin(0.3)])


class TestControllers:
    """CONTROLLERS"""

    def test_static_gains_must_be_positive(self):
        """should reject non-positive static gains"""
        with pytest.raises(ValueError):
            ControllerConfig(GainPair(0.0, 1.0))

    def test_scheduled_gains(self):
        """should convert a scheduled Riccati solution with alpha"""
        schedule = GainSchedule(np.array([0.0, 1.0]), np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]]))
        cfg = ControllerConfig(schedule, alpha=0.5)
        assert cfg.gains_at(0.0) == GainPair(6.0, 4.0)
        assert cfg.gains_at(1.0) == GainPair(0.0, 0.0)

    def test_regulation_controller(self, rng):
        """should apply the regulation law with the configured gains"""
        goal = RegulationGoal(random_rotation(rng, 1.0))
        s = RigidBodyState(random_rotation(rng, 1.0), rng.normal(size=3))
        controller = RegulationController(goal, ControllerConfig(REGULATION))
        assert np.array_equal(controller(0.0, s), regulation_torque(s, goal, REGULATION))
