"""Orchestration of one CLI command: gains, regulate, track, avoid or check."""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np
from loguru import logger

from geo_lqr.dtos import (
    CostParams,
    GainPair,
    GainSchedule,
    RiccatiSolution,
    RigidBodyState,
    RunSummary,
    SimParams,
)
from geo_lqr.dynamics import simulate
from geo_lqr.errors import NumericalError, ValidationError
from geo_lqr.harness.checks import run_checks
from geo_lqr.harness.config import ScenarioConfig
from geo_lqr.harness.output import write_flat_trajectory, write_trajectory
from geo_lqr.pmp import (
    AvoidanceScenario,
    GeodesicBallObstacle,
    ShootingSolver,
    SphereObstacle,
    costate_integrate,
    minimization_residual,
    transcription_oracle,
)
from geo_lqr.regulators import (
    ControllerConfig,
    RegulationController,
    RegulationGoal,
    TrackingController,
    TrackingReference,
    injectivity_guard,
    lyapunov_value,
    tracking_lyapunov_value,
    tracking_value_candidate,
    transported_reference,
    value_candidate,
)
from geo_lqr.riccati import B_INPUT, a_matrix, are_solve, dre_integrate, gains_from_K
from geo_lqr.so3 import geodesic_distance


def _cost_params(cfg: ScenarioConfig) -> CostParams:
    return CostParams(
        alpha=cfg.cost.alpha, gamma=cfg.cost.gamma, q_weights=np.asarray(cfg.cost.q_weights)
    )


def _riccati(cfg: ScenarioConfig) -> tuple[RiccatiSolution, GainPair | GainSchedule]:
    """ARE solution plus the gains the controller will use."""
    p = _cost_params(cfg)
    a = a_matrix(cfg.cost.a_matrix, p.gamma)
    sol = are_solve(a, B_INPUT, p.q_weights, p.alpha)
    if cfg.controller.gain_source == "dre":
        return sol, dre_integrate(a, B_INPUT, p.q_weights, p.alpha, T=cfg.sim.t_end, h=cfg.sim.h)
    return sol, gains_from_K(sol, p)


def _solution_at(gains: GainPair | GainSchedule, sol: RiccatiSolution, t: float):
    return gains.at(t) if isinstance(gains, GainSchedule) else sol


def _gains_dict(g: GainPair) -> dict[str, float]:
    return {"kP": g.kP, "kD": g.kD}


def _initial_state(cfg: ScenarioConfig) -> RigidBodyState:
    return RigidBodyState(
        cfg.initial.rotation_matrix(), np.asarray(cfg.initial.omega, dtype=float)
    )


def _trajectory_path(cfg: ScenarioConfig, out_dir: Path) -> Path:
    return out_dir / cfg.output.trajectory


def run_gains(cfg: ScenarioConfig, out_dir: Path) -> RunSummary:
    p = _cost_params(cfg)
    sol = are_solve(a_matrix(cfg.cost.a_matrix, p.gamma), B_INPUT, p.q_weights, p.alpha)
    g = gains_from_K(sol, p)
    return RunSummary(
        command="gains",
        gains=_gains_dict(g),
        details={"a_matrix": cfg.cost.a_matrix, "k1": sol.k1, "k2": sol.k2, "k3": sol.k3},
    )


def run_regulate(cfg: ScenarioConfig, out_dir: Path) -> RunSummary:
    sol, gains = _riccati(cfg)
    ctrl_cfg = ControllerConfig(gains=gains, alpha=cfg.cost.alpha)
    goal = RegulationGoal(cfg.goal.rotation_matrix())
    init = _initial_state(cfg)
    injectivity_guard(init.r, goal.r_d)

    def diagnostics(t, s, tau):
        return {
            "dist": geodesic_distance(goal.r_d, s.r),
            "lyap": lyapunov_value(s, goal, ctrl_cfg.gains_at(t)),
            "value": value_candidate(s, goal, _solution_at(gains, sol, t)),
        }

    params = SimParams(h=cfg.sim.h, t_end=cfg.sim.t_end, inertia=cfg.inertia_matrix)
    log = simulate(RegulationController(goal, ctrl_cfg), init, params, diagnostics)
    rows = write_trajectory(_trajectory_path(cfg, out_dir), log, cfg.sim.decimation)
    final = log.final
    return RunSummary(
        command="regulate",
        gains=_gains_dict(ctrl_cfg.gains_at(0.0)),
        final_distance=float(log.diagnostics["dist"][-1]),
        final_velocity_norm=float(np.linalg.norm(final.w)),
        iterations={"steps": len(log) - 1},
        details={"rows": rows, "gain_source": cfg.controller.gain_source},
    )


def run_track(cfg: ScenarioConfig, out_dir: Path) -> RunSummary:
    sol, gains = _riccati(cfg)
    ctrl_cfg = ControllerConfig(
        gains=gains,
        feedforward_accel_term=cfg.controller.feedforward_accel_term,
        alpha=cfg.cost.alpha,
    )
    ref = TrackingReference.from_polynomial(
        cfg.reference.omega_ref, cfg.reference.rotation_matrix(), cfg.reference_step
    )
    init = _initial_state(cfg)
    injectivity_guard(init.r, ref.r_ref(0.0))

    def diagnostics(t, s, tau):
        return {
            "dist": geodesic_distance(ref.r_ref(t), s.r),
            "lyap": tracking_lyapunov_value(s, ref, t, ctrl_cfg.gains_at(t)),
            "value": tracking_value_candidate(s, ref, t, _solution_at(gains, sol, t)),
        }

    params = SimParams(h=cfg.sim.h, t_end=cfg.sim.t_end, inertia=cfg.inertia_matrix)
    controller = TrackingController(ref, params.inertia, ctrl_cfg)
    log = simulate(controller, init, params, diagnostics)
    rows = write_trajectory(_trajectory_path(cfg, out_dir), log, cfg.sim.decimation)
    final = log.final
    w_err = final.w - transported_reference(final, ref, float(log.times[-1]))
    return RunSummary(
        command="track",
        gains=_gains_dict(ctrl_cfg.gains_at(0.0)),
        final_distance=float(log.diagnostics["dist"][-1]),
        final_velocity_norm=float(np.linalg.norm(w_err)),
        iterations={"steps": len(log) - 1},
        details={
            "rows": rows,
            "gain_source": cfg.controller.gain_source,
            "feedforward_accel_term": cfg.controller.feedforward_accel_term,
        },
    )


def build_scenario(cfg: ScenarioConfig) -> AvoidanceScenario:
    av = cfg.avoidance
    if av.manifold == "so3-biinvariant":
        as_config = lambda values: np.asarray(values, dtype=float).reshape(3, 3)  # noqa: E731
        obstacles = [GeodesicBallObstacle(as_config(o.center), o.radius) for o in av.obstacles]
        tangent = 3
    else:
        as_config = lambda values: np.asarray(values, dtype=float)  # noqa: E731
        obstacles = [SphereObstacle(o.center, o.radius) for o in av.obstacles]
        tangent = av.dimension
    v0 = np.zeros(tangent) if av.v0 is None else np.asarray(av.v0, dtype=float)
    return AvoidanceScenario(
        alpha=av.alpha,
        q_star=as_config(av.q_star),
        q0=as_config(av.q0),
        v0=v0,
        horizon=av.horizon,
        obstacles=obstacles,
        manifold=av.manifold,
        mode=av.mode,
    )


def run_avoid(cfg: ScenarioConfig, out_dir: Path) -> RunSummary:
    av = cfg.avoidance
    try:
        sc = build_scenario(cfg)
    except ValueError as e:
        raise ValidationError(str(e), "avoidance") from e
    sol = ShootingSolver(sc, h=av.step).solve()
    costate = costate_integrate(
        sol, sc.lagrangian(), sc.terminal().gradient(sol.q[-1], sol.v[-1]), sc.manifold
    )
    clearance = np.array([sc.clearance(q) for q in sol.q])
    rows = write_flat_trajectory(
        _trajectory_path(cfg, out_dir), sol, clearance, costate.hamiltonian, cfg.sim.decimation
    )
    details = {
        "rows": rows,
        "mode": sc.mode,
        "manifold": sc.manifold,
        "cost": sol.cost,
        "terminal_residual": sol.residual,
        "hamiltonian_spread": costate.hamiltonian_spread,
        "minimization_residual": minimization_residual(costate, sol.u, sc.alpha),
    }
    iterations = {"newton": sol.iterations}
    if av.oracle_points:
        oracle = transcription_oracle(sc, av.oracle_points, workers=av.oracle_workers)
        iterations["oracle"] = oracle.iterations
        details["oracle_cost"] = oracle.cost
        details["oracle_objective"] = oracle.objective
    return RunSummary(
        command="avoid",
        final_distance=float(np.linalg.norm(sc.space.difference(sol.q[-1], sc.q_star))),
        final_velocity_norm=float(np.linalg.norm(sol.v[-1])),
        min_clearance=float(clearance.min()) if sc.obstacles else None,
        iterations=iterations,
        details=details,
    )


def run_check(cfg: ScenarioConfig, out_dir: Path) -> RunSummary:
    results = run_checks()
    return RunSummary(
        command="check",
        details={
            "passed": all(r.passed for r in results),
            "checks": [r.to_dict() for r in results],
        },
    )


COMMANDS = {
    "gains": run_gains,
    "regulate": run_regulate,
    "track": run_track,
    "avoid": run_avoid,
    "check": run_check,
}


def run(cfg: ScenarioConfig, out_dir: str | Path | None = None) -> RunSummary:
    """Execute the configured command, writing its CSV and optional summary file.

    ``out_dir`` overrides ``output.directory``.
    """
    out = Path(out_dir if out_dir is not None else cfg.output.directory)
    logger.info("running {} (output in {})", cfg.command, out)
    start = time.perf_counter()
    try:
        summary = COMMANDS[cfg.command](cfg, out)
    except NumericalError as e:
        e.add_note(f"while running {cfg.command!r} after {time.perf_counter() - start:.2f}s")
        raise e
    summary.wall_clock_seconds = time.perf_counter() - start
    if cfg.output.summary:
        path = out / cfg.output.summary
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(summary.json(), encoding="utf-8")
    return summary
