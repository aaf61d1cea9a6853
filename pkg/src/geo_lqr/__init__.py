from loguru import logger

from geo_lqr.dtos import (
    BVPSolution,
    CostParams,
    FlatState,
    GainPair,
    GainSchedule,
    RiccatiSolution,
    RigidBodyState,
    RunSummary,
    SimParams,
    TrajectoryLog,
)
from geo_lqr.so3 import exp_so3, geodesic_distance, hat, log_so3, vee
from geo_lqr.riccati import a_matrix, are_solve, dre_integrate, gains_from_K
from geo_lqr.dynamics import lie_euler_step, simulate
from geo_lqr.regulators import (
    ControllerConfig,
    RegulationController,
    RegulationGoal,
    TrackingController,
    TrackingReference,
)

logger.disable("geo_lqr")
"""Library use is silent; the CLI enables the ``geo_lqr`` logger."""
