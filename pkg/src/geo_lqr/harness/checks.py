"""Built-in invariant suite run by ``geo-lqr check``.

Each check is small enough for an interactive run and returns a
:class:`CheckResult`; a check that raises counts as failed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg
from loguru import logger

from geo_lqr.dtos import CostParams, DTO, RigidBodyState
from geo_lqr.dynamics import lie_euler_step
from geo_lqr.errors import NumericalError
from geo_lqr.pmp.manifolds import curvature
from geo_lqr.pmp.scenario import AvoidanceScenario
from geo_lqr.pmp.shooting import shooting_solve
from geo_lqr.riccati import (
    B_INPUT,
    a_matrix,
    are_solve,
    dre_integrate,
    dre_residual,
    gains_from_K,
    scalar_residual,
)
from geo_lqr.so3 import exp_so3, log_so3, orthogonality_defect

CHECK_SEED = 20240601


class CheckFailed(Exception):
    pass


def _expect(condition, message: str) -> None:
    if not condition:
        raise CheckFailed(message)


@dataclass(slots=True)
class CheckResult(DTO):
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def flat_linear_control(
    alpha: float, horizon: float, q0: float, q_star: float, v0: float, times: np.ndarray
) -> np.ndarray:
    """Optimal 1D control of ``∫ ½(q − q*)² + ½v² + (α/2)u² dt`` with free end state.

    Solves the linear state-costate system ``(q − q*, v, p₁, p₂)`` through
    its matrix exponential and returns ``u = −p₂/α`` at ``times``.
    """
    m = np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, -1.0 / alpha],
            [-1.0, 0.0, 0.0, 0.0],
            [0.0, -1.0, -1.0, 0.0],
        ]
    )
    phi = scipy.linalg.expm(m * horizon)
    x0 = np.array([q0 - q_star, v0])
    p0 = np.linalg.solve(phi[2:, 2:], -phi[2:, :2] @ x0)
    z0 = np.concatenate([x0, p0])
    return np.array([-(scipy.linalg.expm(m * t) @ z0)[3] / alpha for t in times])


def check_exp_log_roundtrip() -> str:
    rng = np.random.default_rng(CHECK_SEED)
    worst = 0.0
    for _ in range(2000):
        axis = rng.normal(size=3)
        v = axis / np.linalg.norm(axis) * rng.uniform(0.0, np.pi - 1e-3)
        worst = max(worst, float(np.linalg.norm(log_so3(exp_so3(v)) - v)))
    _expect(worst <= 1e-9, f"roundtrip error {worst:.3g}")
    return f"max error {worst:.3g}"


def _check_gains(mode, alpha, gamma, expected) -> str:
    p = CostParams(alpha=alpha, gamma=gamma)
    g = gains_from_K(are_solve(a_matrix(mode, gamma), B_INPUT, p.q_weights, alpha), p)
    got = (g.kP, g.kD)
    _expect(np.allclose(got, expected, atol=1e-3), f"got kP={got[0]:.4f} kD={got[1]:.4f}")
    return f"kP={g.kP:.4f} kD={g.kD:.4f}"


def check_regulation_gains() -> str:
    return _check_gains("paper-regulation", 0.5, 0.0, (1.4142, 2.7671))


def check_tracking_gains() -> str:
    return _check_gains("paper-tracking", 1.0, -2.0, (8.7852, 8.3357))


def check_scalar_consistency() -> str:
    rng = np.random.default_rng(CHECK_SEED)
    solved = 0
    worst = 0.0
    for _ in range(50):
        p = CostParams(
            alpha=float(rng.uniform(0.1, 10.0)), gamma=float(rng.uniform(-2.0, 2.0))
        )
        try:
            sol = are_solve(a_matrix("reconciled", p.gamma), B_INPUT, p.q_weights, p.alpha)
        except NumericalError:
            continue
        solved += 1
        worst = max(worst, float(np.max(np.abs(scalar_residual(sol, p)))))
    _expect(worst <= 1e-9, f"scalar residual {worst:.3g}")
    return f"{solved} stabilizing pairs, max residual {worst:.3g}"


def check_lie_euler_orthogonality() -> str:
    j = np.diag([1.0, 2.0, 3.0])
    s = RigidBodyState(exp_so3([0.9, -0.4, 0.2]), np.array([0.3, -0.2, 0.5]))
    for _ in range(10_000):
        s = lie_euler_step(s, np.zeros(3), 1e-3, j)
    defect = orthogonality_defect(s.r)
    _expect(defect <= 1e-10, f"defect {defect:.3g}")
    return f"defect {defect:.3g}"


def check_dre_limit() -> str:
    p = CostParams(alpha=1.0, gamma=-2.0)
    a = a_matrix("paper-tracking", p.gamma)
    sol = are_solve(a, B_INPUT, p.q_weights, p.alpha)
    schedule = dre_integrate(a, B_INPUT, p.q_weights, p.alpha, T=50.0)
    gap = float(np.max(np.abs(schedule.at(0.0).matrix - sol.matrix)))
    _expect(gap <= 1e-4, f"gap {gap:.3g}")
    return f"gap {gap:.3g}"


def check_dre_residual() -> str:
    p = CostParams(alpha=1.0, gamma=-2.0)
    a = a_matrix("paper-tracking", p.gamma)
    h = 1e-3
    schedule = dre_integrate(a, B_INPUT, p.q_weights, p.alpha, T=2.0, h=h)
    res = dre_residual(schedule, a, B_INPUT, p.q_weights, p.alpha)
    low = float(min(np.linalg.eigvalsh(schedule.at(t).matrix)[0] for t in schedule.times))
    _expect(res <= 10.0 * h * h, f"residual {res:.3g}")
    _expect(low >= -1e-10, f"min eigenvalue {low:.3g}")
    return f"residual {res:.3g}, min eigenvalue {low:.3g}"


def check_sectional_curvature() -> str:
    x, y = np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    sectional = float(curvature("so3-biinvariant", x, y, y) @ x)
    _expect(np.isclose(sectional, 0.25), f"sectional curvature {sectional}")
    _expect(not np.any(curvature("flat", x, y, y)), "flat curvature is not zero")
    return f"K(e1, e2) = {sectional:g}"


def check_flat_shooting() -> str:
    sc = AvoidanceScenario(alpha=1.0, q_star=[0.0], q0=[1.0], v0=[0.0], horizon=1.0)
    sol = shooting_solve(sc)
    exact = flat_linear_control(1.0, 1.0, 1.0, 0.0, 0.0, sol.times)
    err = float(np.max(np.abs(sol.u[:, 0] - exact)))
    _expect(err <= 1e-5, f"sup error {err:.3g}")
    return f"sup error {err:.3g} in {sol.iterations} iterations"


CHECKS: dict[str, Callable[[], str]] = {
    "exp_log_roundtrip": check_exp_log_roundtrip,
    "regulation_gains": check_regulation_gains,
    "tracking_gains": check_tracking_gains,
    "scalar_consistency": check_scalar_consistency,
    "lie_euler_orthogonality": check_lie_euler_orthogonality,
    "dre_limit": check_dre_limit,
    "dre_residual": check_dre_residual,
    "sectional_curvature": check_sectional_curvature,
    "flat_shooting": check_flat_shooting,
}


def run_checks(names: list[str] | None = None) -> list[CheckResult]:
    results = []
    for name in names or list(CHECKS):
        start = time.perf_counter()
        try:
            detail, passed = CHECKS[name](), True
        except (CheckFailed, NumericalError) as e:
            detail, passed = str(e), False
        results.append(CheckResult(name, passed, detail, time.perf_counter() - start))
        logger.info("check {}: {} ({})", name, "ok" if passed else "FAILED", detail)
    return results
