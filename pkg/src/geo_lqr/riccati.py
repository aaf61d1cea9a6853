"""Riccati equations for the 2x2 geometric LQR structure.

The state is ``(d-coordinate, velocity)`` with ``B = [0; 1]``; the
solution ``K = [[k1, k3], [k3, k2]]`` gives the gains ``kP = k3/alpha``
and ``kD = k2/alpha``.
"""

from __future__ import annotations

from typing import Literal

import numpy as np
import numpy.typing as npt
import scipy.linalg
from loguru import logger

from geo_lqr.dtos import CostParams, GainPair, GainSchedule, RiccatiSolution
from geo_lqr.errors import NoStabilizingSolution, NotControllable, StepTooLarge
from geo_lqr.utils import uniform_steps

AMatrixMode = Literal["paper-regulation", "paper-tracking", "reconciled"]

B_INPUT = np.array([[0.0], [1.0]])

ARE_TOL = 1e-9
NEWTON_MAX_ITERATIONS = 8
IMAGINARY_AXIS_TOL = 1e-10
DRE_BLOWUP = 1e9


def a_matrix(mode: AMatrixMode, gamma: float = 0.0) -> np.ndarray:
    """Drift matrix for one of the three supported conventions.

    ``paper-regulation`` and ``paper-tracking`` reproduce the published
    gain tables; ``reconciled`` is the matrix whose ARE is equivalent to
    the scalar system checked by :func:`scalar_residual`.
    """
    match mode:
        case "paper-regulation":
            return np.array([[0.0, 2.0], [0.0, 0.0]])
        case "paper-tracking":
            return np.array([[-gamma, 2.0], [0.0, -gamma]])
        case "reconciled":
            return np.array([[-0.5 * gamma, 1.0], [0.0, -0.5 * gamma]])
    raise ValueError(f"unknown A-matrix mode: {mode!r}")


def scalar_residual(sol: RiccatiSolution, p: CostParams) -> np.ndarray:
    a, g = p.alpha, p.gamma
    q = p.q_weights
    k1, k2, k3 = sol.k1, sol.k2, sol.k3
    return np.array(
        [
            q[0, 0] - k3 * k3 / a - g * k1,
            q[1, 1] + 2.0 * k3 - k2 * k2 / a - g * k2,
            q[0, 1] + k1 - k3 * k2 / a - g * k3,
        ]
    )


def gains_from_K(sol: RiccatiSolution, p: CostParams | float) -> GainPair:
    alpha = p.alpha if isinstance(p, CostParams) else float(p)
    return GainPair(kP=sol.k3 / alpha, kD=sol.k2 / alpha)


def _input_weight(B: np.ndarray, Rw: float) -> np.ndarray:
    return (B @ B.T) / Rw


def are_residual(A, B, Q, Rw: float, K: np.ndarray) -> float:
    A, B, Q = _as_system(A, B, Q)
    res = A.T @ K + K @ A - K @ _input_weight(B, Rw) @ K + Q
    return float(np.linalg.norm(res))


def closed_loop_matrix(A, B, Rw: float, K: np.ndarray) -> np.ndarray:
    A, B, _ = _as_system(A, B, np.zeros((2, 2)))
    return A - _input_weight(B, Rw) @ K


def is_hurwitz(m: np.ndarray) -> bool:
    return bool(np.all(np.linalg.eigvals(m).real < 0.0))


def _as_system(A, B, Q) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float).reshape(2, 1)
    Q = np.asarray(Q, dtype=float)
    if A.shape != (2, 2) or Q.shape != (2, 2):
        raise ValueError("A and Q must be 2x2")
    return A, B, Q


def _check_controllable(A: np.ndarray, B: np.ndarray) -> None:
    ctrb = np.hstack([B, A @ B])
    sv = np.linalg.svd(ctrb, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1.0):
        raise NotControllable(f"rank [B, AB] < 2 (singular values {sv})")


def _stable_subspace(A, S, Q) -> np.ndarray:
    """Initial K from the stable invariant subspace of the Hamiltonian matrix."""
    H = np.block([[A, -S], [-Q, -A.T]])
    eigvals, eigvecs = np.linalg.eig(H)
    scale = max(1.0, np.max(np.abs(eigvals)))
    if np.any(np.abs(eigvals.real) <= IMAGINARY_AXIS_TOL * scale):
        raise NoStabilizingSolution(
            f"Hamiltonian matrix has eigenvalues on the imaginary axis: {eigvals}"
        )
    stable = eigvecs[:, eigvals.real < 0.0]
    if stable.shape[1] != 2:
        raise NoStabilizingSolution("stable subspace is not two-dimensional")
    x1, x2 = stable[:2], stable[2:]
    if np.linalg.cond(x1) > 1e12:
        raise NoStabilizingSolution("stable subspace is not a graph over the state")
    K = np.real(x2 @ np.linalg.inv(x1))
    return 0.5 * (K + K.T)


def are_solve(
    A: npt.ArrayLike, B: npt.ArrayLike, Q: npt.ArrayLike, Rw: float
) -> RiccatiSolution:
    """Stabilizing solution of ``AᵀK + KA − K B Rw⁻¹ Bᵀ K + Q = 0``.

    Hamiltonian eigenvector method followed by Newton (Kleinman)
    refinement.

    Raises:
        NotControllable: rank of ``[B, AB]`` is below 2.
        NoStabilizingSolution: no stable invariant subspace or the
            refined solution fails to stabilize ``A − B Rw⁻¹ Bᵀ K``.
    """
    if not Rw > 0.0:
        raise ValueError(f"Rw must be positive, got {Rw}")
    A, B, Q = _as_system(A, B, Q)
    _check_controllable(A, B)
    S = _input_weight(B, Rw)

    K = _stable_subspace(A, S, Q)
    best, best_res = K, are_residual(A, B, Q, Rw, K)
    for _ in range(NEWTON_MAX_ITERATIONS):
        if best_res <= 1e-3 * ARE_TOL:
            break
        ac = A - S @ K
        if not is_hurwitz(ac):
            break
        K = scipy.linalg.solve_continuous_lyapunov(ac.T, -(Q + K @ S @ K))
        K = 0.5 * (K + K.T)
        res = are_residual(A, B, Q, Rw, K)
        if res < best_res:
            best, best_res = K, res

    if not is_hurwitz(A - S @ best):
        raise NoStabilizingSolution("closed loop is not Hurwitz")
    if best_res > ARE_TOL * max(1.0, np.linalg.norm(best)):
        raise NoStabilizingSolution(f"ARE residual {best_res:.3g} above tolerance")

    sol = RiccatiSolution.from_matrix(best)
    logger.debug("ARE solved: K={} residual={:.3g}", best.tolist(), best_res)
    return sol


def _dre_rate(k, a, s, q):
    """dK/dτ in reversed time τ = T − t, on the packed entries (k1, k2, k3)."""
    k1, k2, k3 = k
    a11, a12, a21, a22 = a
    s11, s12, s22 = s
    q11, q12, q22 = q
    ks11 = k1 * s11 + k3 * s12
    ks12 = k1 * s12 + k3 * s22
    ks21 = k3 * s11 + k2 * s12
    ks22 = k3 * s12 + k2 * s22
    return (
        2.0 * (a11 * k1 + a21 * k3) - (ks11 * k1 + ks12 * k3) + q11,
        2.0 * (a12 * k3 + a22 * k2) - (ks21 * k3 + ks22 * k2) + q22,
        a11 * k3 + a21 * k2 + a12 * k1 + a22 * k3 - (ks11 * k3 + ks12 * k2) + q12,
    )


def dre_integrate(
    A: npt.ArrayLike,
    B: npt.ArrayLike,
    Q: npt.ArrayLike,
    Rw: float,
    T: float,
    h: float = 1e-3,
) -> GainSchedule:
    """Integrate ``K' + AᵀK + KA − K B Rw⁻¹ Bᵀ K = −Q`` backward from ``K(T) = 0``.

    Classical RK4 on the three independent entries, so every stored K is
    exactly symmetric. The grid is uniform with ``ceil(T/h)`` steps ending
    exactly at T.

    Raises:
        StepTooLarge: an entry of K exceeds 1e9 (finite escape).
    """
    if not T > 0.0 or not 0.0 < h <= T:
        raise ValueError(f"need T > 0 and 0 < h <= T, got T={T}, h={h}")
    if not Rw > 0.0:
        raise ValueError(f"Rw must be positive, got {Rw}")
    A, B, Q = _as_system(A, B, Q)
    S = _input_weight(B, Rw)
    a = (A[0, 0], A[0, 1], A[1, 0], A[1, 1])
    s = (S[0, 0], S[0, 1], S[1, 1])
    q = (Q[0, 0], 0.5 * (Q[0, 1] + Q[1, 0]), Q[1, 1])

    n = uniform_steps(T, h)
    dt = T / n
    packed = np.zeros((n + 1, 3))
    k = (0.0, 0.0, 0.0)
    for i in range(1, n + 1):
        r1 = _dre_rate(k, a, s, q)
        r2 = _dre_rate(tuple(k[j] + 0.5 * dt * r1[j] for j in range(3)), a, s, q)
        r3 = _dre_rate(tuple(k[j] + 0.5 * dt * r2[j] for j in range(3)), a, s, q)
        r4 = _dre_rate(tuple(k[j] + dt * r3[j] for j in range(3)), a, s, q)
        k = tuple(
            k[j] + dt / 6.0 * (r1[j] + 2.0 * r2[j] + 2.0 * r3[j] + r4[j]) for j in range(3)
        )
        if not all(abs(x) <= DRE_BLOWUP for x in k):
            raise StepTooLarge(
                f"Riccati solution exceeded {DRE_BLOWUP:g} at t={T - i * dt:.6g}"
            )
        packed[i] = k

    times = np.linspace(0.0, T, n + 1)
    logger.debug("DRE integrated over [0, {}] with {} steps", T, n)
    return GainSchedule(times=times, k=packed[::-1].copy())


def dre_residual(
    schedule: GainSchedule,
    A: npt.ArrayLike,
    B: npt.ArrayLike,
    Q: npt.ArrayLike,
    Rw: float,
    points: Literal[3, 5] = 5,
) -> float:
    """Largest Frobenius norm of ``K' + AᵀK + KA − K B Rw⁻¹ Bᵀ K + Q`` on the grid.

    ``K'`` comes from central differences on the stored samples, three or
    five points wide, at the interior grid times the stencil reaches. The
    three-point stencil carries its own ``h²|K'''|/6`` truncation error,
    which dominates when K changes quickly; the five-point stencil leaves
    the integrator's error visible.
    """
    A, B, Q = _as_system(A, B, Q)
    S = _input_weight(B, Rw)
    k = schedule.k
    h = float(schedule.times[1] - schedule.times[0])
    if points == 3:
        rate = (k[2:] - k[:-2]) / (2.0 * h)
        inner = k[1:-1]
    elif points == 5:
        rate = (-k[4:] + 8.0 * k[3:-1] - 8.0 * k[1:-3] + k[:-4]) / (12.0 * h)
        inner = k[2:-2]
    else:
        raise ValueError(f"stencil must have 3 or 5 points, got {points}")
    if len(inner) == 0:
        raise ValueError("schedule too short for the stencil")

    worst = 0.0
    for (k1, k2, k3), (d1, d2, d3) in zip(inner, rate):
        K = np.array([[k1, k3], [k3, k2]])
        dK = np.array([[d1, d3], [d3, d2]])
        res = dK + A.T @ K + K @ A - K @ S @ K + Q
        worst = max(worst, float(np.linalg.norm(res)))
    return worst
