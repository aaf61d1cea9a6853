"""Scenario configuration: a single JSON object validated with pydantic.

Every section forbids unknown keys. Validation failures are reported as
:class:`geo_lqr.errors.ValidationError` carrying the dotted path of the
offending field (``"initial.rotation"``).
"""

from __future__ import annotations

import json
from typing import Literal

import numpy as np
import pydantic
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from geo_lqr.errors import ParseError, ValidationError
from geo_lqr.so3 import as_inertia, as_rotation, exp_so3

CONFIG_ROTATION_TOL = 1e-6

Command = Literal["gains", "regulate", "track", "avoid", "check"]
AMatrixName = Literal["paper-regulation", "paper-tracking", "reconciled"]

IDENTITY = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]


def _rotation(values: list[float]) -> list[float]:
    if len(values) != 9:
        raise ValueError(f"expected 9 numbers in row-major order, got {len(values)}")
    try:
        as_rotation(values, tol=CONFIG_ROTATION_TOL)
    except ValueError as e:
        raise ValueError(str(e)) from None
    return values


def _vector(values: list[float], size: int) -> list[float]:
    if len(values) != size:
        raise ValueError(f"expected {size} numbers, got {len(values)}")
    return values


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CostSection(Section):
    alpha: float = Field(1.0, gt=0.0)
    gamma: float = 0.0
    q_weights: list[list[float]] = Field(default_factory=lambda: [[1.0, 0.0], [0.0, 1.0]])
    a_matrix: AMatrixName | None = None

    @field_validator("q_weights")
    @classmethod
    def check_weights(cls, q):
        arr = np.asarray(q, dtype=float)
        if arr.shape != (2, 2):
            raise ValueError("q_weights must be 2x2")
        if not np.allclose(arr, arr.T, atol=1e-12):
            raise ValueError("q_weights must be symmetric")
        if np.min(np.linalg.eigvalsh(arr)) < 0.0:
            raise ValueError("q_weights must be positive semidefinite")
        return q


class SimSection(Section):
    h: float = Field(1e-3, gt=0.0, le=0.01)
    t_end: float = Field(20.0, gt=0.0)
    decimation: int = Field(10, ge=1)


class InitialSection(Section):
    rotation: list[float] | None = None
    axis_angle: list[float] | None = None
    omega: list[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0])

    @field_validator("rotation")
    @classmethod
    def check_rotation(cls, v):
        return v if v is None else _rotation(v)

    @field_validator("omega")
    @classmethod
    def check_omega(cls, v):
        return _vector(v, 3)

    @field_validator("axis_angle")
    @classmethod
    def check_axis_angle(cls, v):
        if v is not None and np.linalg.norm(_vector(v, 3)) >= np.pi:
            raise ValueError("axis-angle vector must be shorter than pi")
        return v

    @model_validator(mode="after")
    def one_attitude(self):
        if self.rotation is not None and self.axis_angle is not None:
            raise ValidationError("give either rotation or axis_angle", "initial.axis_angle")
        return self

    def rotation_matrix(self) -> np.ndarray:
        if self.axis_angle is not None:
            return exp_so3(self.axis_angle)
        return np.asarray(self.rotation or IDENTITY, dtype=float).reshape(3, 3)


class GoalSection(Section):
    rotation: list[float] = Field(default_factory=lambda: list(IDENTITY))

    @field_validator("rotation")
    @classmethod
    def check_rotation(cls, v):
        return _rotation(v)

    def rotation_matrix(self) -> np.ndarray:
        return np.asarray(self.rotation, dtype=float).reshape(3, 3)


class ReferenceSection(Section):
    omega_ref: list[list[float]]
    rotation: list[float] = Field(default_factory=lambda: list(IDENTITY))
    h_ref: float | None = Field(None, gt=0.0)

    @field_validator("rotation")
    @classmethod
    def check_rotation(cls, v):
        return _rotation(v)

    @field_validator("omega_ref")
    @classmethod
    def check_axes(cls, coeffs):
        if len(coeffs) != 3:
            raise ValueError("omega_ref needs one coefficient list per axis")
        return coeffs

    def rotation_matrix(self) -> np.ndarray:
        return np.asarray(self.rotation, dtype=float).reshape(3, 3)


class ControllerSection(Section):
    gain_source: Literal["are", "dre"] = "are"
    feedforward_accel_term: bool = False


class ObstacleSection(Section):
    center: list[float]
    radius: float = Field(gt=0.0)


class AvoidanceSection(Section):
    dimension: int = Field(ge=1)
    alpha: float = Field(1.0, gt=0.0)
    q_star: list[float]
    q0: list[float]
    v0: list[float] | None = None
    horizon: float = Field(gt=0.0)
    obstacles: list[ObstacleSection] = Field(default_factory=list)
    mode: Literal["avoidance", "regulation"] = "avoidance"
    manifold: Literal["flat", "so3-biinvariant"] = "flat"
    oracle_points: int = Field(0, ge=0)
    oracle_workers: int = Field(1, ge=1)
    step: float = Field(1e-3, gt=0.0, le=0.01)

    @model_validator(mode="after")
    def check_shapes(self):
        config_size = 9 if self.manifold == "so3-biinvariant" else self.dimension
        tangent_size = 3 if self.manifold == "so3-biinvariant" else self.dimension
        for name in ("q_star", "q0"):
            value = getattr(self, name)
            if len(value) != config_size:
                raise ValidationError(
                    f"expected {config_size} numbers, got {len(value)}", f"avoidance.{name}"
                )
            if self.manifold == "so3-biinvariant":
                try:
                    _rotation(value)
                except ValueError as e:
                    raise ValidationError(str(e), f"avoidance.{name}") from None
        if self.v0 is not None and len(self.v0) != tangent_size:
            raise ValidationError(f"expected {tangent_size} numbers", "avoidance.v0")
        for i, obstacle in enumerate(self.obstacles):
            if len(obstacle.center) != config_size:
                raise ValidationError(
                    f"expected {config_size} numbers", f"avoidance.obstacles.{i}.center"
                )
        if 0 < self.oracle_points < 50:
            raise ValidationError("oracle needs at least 50 points", "avoidance.oracle_points")
        if self.oracle_points and self.manifold != "flat":
            raise ValidationError("oracle supports flat space only", "avoidance.oracle_points")
        return self


class OutputSection(Section):
    directory: str = "."
    trajectory: str = "trajectory.csv"
    summary: str | None = None


class ScenarioConfig(Section):
    command: Command
    cost: CostSection = Field(default_factory=CostSection)
    sim: SimSection = Field(default_factory=SimSection)
    inertia: list[list[float]] = Field(
        default_factory=lambda: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    )
    initial: InitialSection = Field(default_factory=InitialSection)
    goal: GoalSection = Field(default_factory=GoalSection)
    reference: ReferenceSection | None = None
    controller: ControllerSection = Field(default_factory=ControllerSection)
    avoidance: AvoidanceSection | None = None
    output: OutputSection = Field(default_factory=OutputSection)

    @field_validator("inertia")
    @classmethod
    def check_inertia(cls, j):
        try:
            as_inertia(j)
        except ValueError as e:
            raise ValueError(str(e)) from None
        return j

    @model_validator(mode="after")
    def check_command(self):
        if self.command in ("gains", "regulate", "track") and self.cost.a_matrix is None:
            raise ValidationError(
                f"the {self.command} command needs an explicit A-matrix mode", "cost.a_matrix"
            )
        if self.command == "track" and self.reference is None:
            raise ValidationError("the track command needs a reference", "reference")
        if self.command == "avoid" and self.avoidance is None:
            raise ValidationError("the avoid command needs an avoidance section", "avoidance")
        return self

    @property
    def inertia_matrix(self) -> np.ndarray:
        return np.asarray(self.inertia, dtype=float)

    @property
    def reference_step(self) -> float:
        if self.reference is None or self.reference.h_ref is None:
            return self.sim.h
        return self.reference.h_ref


def _field_path(loc: tuple) -> str:
    return ".".join(str(part) for part in loc)


def parse_config(text: str, command: str | None = None) -> ScenarioConfig:
    """Parse and validate a scenario.

    ``command`` fills in a missing ``command`` key and must match a present one.

    Raises:
        ParseError: the text is not a JSON object.
        ValidationError: a value violates its invariants; ``.field`` names it.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed JSON: {e}") from e
    if not isinstance(data, dict):
        raise ParseError(f"expected a JSON object, got {type(data).__name__}")
    if command is not None:
        if data.setdefault("command", command) != command:
            raise ValidationError(
                f"config is for {data['command']!r}, not {command!r}", "command"
            )
    try:
        return ScenarioConfig.model_validate(data)
    except pydantic.ValidationError as e:
        first = e.errors()[0]
        message = first["msg"].removeprefix("Value error, ")
        raise ValidationError(message, _field_path(first["loc"]) or None) from e
