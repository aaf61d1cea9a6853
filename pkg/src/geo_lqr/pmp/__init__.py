from geo_lqr.pmp.manifolds import BiInvariantSO3, FlatSpace, Manifold, curvature, get_manifold
from geo_lqr.pmp.scenario import (
    AvoidanceScenario,
    GeodesicBallObstacle,
    Lagrangian,
    SphereObstacle,
    TerminalCost,
    avoidance_rhs,
    jacobi_rhs,
)
from geo_lqr.pmp.integrate import rollout
from geo_lqr.pmp.variational import variational_propagate
from geo_lqr.pmp.costate import control_from_costate, costate_integrate, minimization_residual
from geo_lqr.pmp.shooting import ShootingSolver, shooting_solve
from geo_lqr.pmp.transcription import TranscriptionOracle, trajectory_cost, transcription_oracle
