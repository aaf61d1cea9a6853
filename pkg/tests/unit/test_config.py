import json

import numpy as np
import pytest

from geo_lqr.errors import ParseError, ValidationError
from geo_lqr.harness import parse_config
from geo_lqr.so3 import exp_so3


def parse(**data):
    return parse_config(json.dumps(data))


def field_of(**data) -> str | None:
    with pytest.raises(ValidationError) as info:
        parse(**data)
    return info.value.field


class TestParse:
    """PARSE"""

    def test_defaults(self):
        """should fill every section with its defaults"""
        cfg = parse(command="check")
        assert cfg.cost.alpha == 1.0
        assert cfg.sim.h == 1e-3
        assert cfg.sim.t_end == 20.0
        assert cfg.sim.decimation == 10
        assert cfg.controller.gain_source == "are"
        assert cfg.controller.feedforward_accel_term is False
        assert np.array_equal(cfg.initial.rotation_matrix(), np.eye(3))
        assert np.array_equal(cfg.inertia_matrix, np.eye(3))
        assert cfg.output.summary is None

    def test_malformed_json(self):
        """should raise ParseError for text that is not JSON"""
        with pytest.raises(ParseError):
            parse_config("{command: gains")

    def test_not_an_object(self):
        """should raise ParseError for a JSON value that is not an object"""
        with pytest.raises(ParseError):
            parse_config("[1, 2, 3]")

    def test_command_from_argument(self):
        """should take the command from the CLI when the file leaves it out"""
        cfg = parse_config('{"cost": {"a_matrix": "paper-regulation"}}', command="gains")
        assert cfg.command == "gains"

    def test_command_mismatch(self):
        """should refuse a file written for another command"""
        with pytest.raises(ValidationError) as info:
            parse_config('{"command": "track"}', command="gains")
        assert info.value.field == "command"

    def test_reference_polynomial(self):
        """should read per-axis omega_ref coefficients and default h_ref to the sim step"""
        cfg = parse(
            command="track",
            cost={"a_matrix": "paper-tracking", "gamma": -2.0},
            sim={"h": 2e-3},
            reference={"omega_ref": [[0, 0.5], [0, 0.3], [0, 0.4]]},
        )
        assert cfg.reference.omega_ref == [[0, 0.5], [0, 0.3], [0, 0.4]]
        assert cfg.reference_step == 2e-3

    def test_axis_angle(self):
        """should build the initial attitude from an axis-angle vector"""
        cfg = parse(command="check", initial={"axis_angle": [0.9, -0.4, 0.2]})
        assert np.allclose(cfg.initial.rotation_matrix(), exp_so3([0.9, -0.4, 0.2]))


class TestValidation:
    """VALIDATION"""

    def test_bad_rotation(self):
        """should name initial.rotation for a scaled matrix"""
        bad = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.1]
        assert field_of(command="check", initial={"rotation": bad}) == "initial.rotation"

    def test_rotation_length(self):
        """should need nine numbers for a rotation"""
        assert field_of(command="check", goal={"rotation": [1.0, 0.0, 0.0]}) == "goal.rotation"

    def test_attitude_given_twice(self):
        """should refuse both rotation and axis_angle"""
        initial = {"rotation": np.eye(3).ravel().tolist(), "axis_angle": [0.1, 0.0, 0.0]}
        assert field_of(command="check", initial=initial) == "initial.axis_angle"

    def test_axis_angle_too_long(self):
        """should refuse an axis-angle vector at the cut locus"""
        assert field_of(command="check", initial={"axis_angle": [3.2, 0.0, 0.0]}) == (
            "initial.axis_angle"
        )

    def test_a_matrix_required(self):
        """should never infer the A-matrix mode"""
        assert field_of(command="gains") == "cost.a_matrix"
        assert field_of(command="regulate", cost={"alpha": 0.5}) == "cost.a_matrix"

    def test_track_needs_reference(self):
        """should refuse a tracking run without a reference"""
        assert field_of(command="track", cost={"a_matrix": "paper-tracking"}) == "reference"

    def test_avoid_needs_section(self):
        """should refuse an avoidance run without an avoidance section"""
        assert field_of(command="avoid") == "avoidance"

    def test_unknown_key(self):
        """should forbid keys it does not know"""
        assert field_of(command="check", cost={"beta": 1.0}) == "cost.beta"

    def test_step_range(self):
        """should refuse a simulation step above 0.01"""
        assert field_of(command="check", sim={"h": 0.02}) == "sim.h"

    def test_positive_alpha(self):
        """should refuse a non-positive control weight"""
        assert field_of(command="check", cost={"alpha": 0.0}) == "cost.alpha"

    def test_weights(self):
        """should refuse asymmetric state weights"""
        assert field_of(command="check", cost={"q_weights": [[1, 0.5], [0, 1]]}) == (
            "cost.q_weights"
        )

    def test_inertia(self):
        """should refuse an indefinite inertia tensor"""
        assert field_of(command="check", inertia=[[1, 0, 0], [0, -1, 0], [0, 0, 1]]) == "inertia"

    def test_avoidance_shapes(self):
        """should check configuration sizes and oracle settings"""
        base = {"dimension": 2, "q_star": [1.0, 0.0], "q0": [0.0, 0.0], "horizon": 1.0}
        assert field_of(command="avoid", avoidance={**base, "q0": [0.0]}) == "avoidance.q0"
        obstacles = [{"center": [1.0], "radius": 0.2}]
        assert field_of(command="avoid", avoidance={**base, "obstacles": obstacles}) == (
            "avoidance.obstacles.0.center"
        )
        assert field_of(command="avoid", avoidance={**base, "oracle_points": 10}) == (
            "avoidance.oracle_points"
        )
        cfg = parse(command="avoid", avoidance={**base, "oracle_points": 60})
        assert cfg.avoidance.oracle_points == 60

    def test_so3_oracle(self):
        """should refuse the oracle on the rotation group"""
        identity = np.eye(3).ravel().tolist()
        avoidance = {
            "dimension": 3,
            "manifold": "so3-biinvariant",
            "q_star": identity,
            "q0": identity,
            "horizon": 1.0,
            "oracle_points": 60,
        }
        assert field_of(command="avoid", avoidance=avoidance) == "avoidance.oracle_points"
